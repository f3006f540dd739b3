/**
 * UI model and reducer.
 *
 * Every rendered physical value comes from a received snapshot; the model
 * never simulates anything client-side. The reducer also derives the
 * bounded event log by diffing consecutive snapshots.
 */

import type { GatewayMessage, Session, Snapshot } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface LogEntry {
  simTMs: number | null;
  text: string;
}

export interface UiModel {
  connection: Connection;
  session: Session | null;
  latest: Snapshot | null;
  /** Commands sent but not yet acked/rejected. */
  pendingCommands: number;
  /** Countdown shown in the modal; mirrors the latest snapshot only. */
  countdownMs: number | null;
  log: LogEntry[];
}

export const LOG_LIMIT = 50;

export function initialModel(): UiModel {
  return {
    connection: "connecting",
    session: null,
    latest: null,
    pendingCommands: 0,
    countdownMs: null,
    log: [],
  };
}

function pushLog(model: UiModel, simTMs: number | null, text: string): UiModel {
  const log = [...model.log, { simTMs, text }];
  if (log.length > LOG_LIMIT) log.splice(0, log.length - LOG_LIMIT);
  return { ...model, log };
}

export function onConnected(model: UiModel): UiModel {
  return pushLog({ ...model, connection: "open" }, null, "connected");
}

export function onDisconnected(model: UiModel): UiModel {
  return pushLog({ ...model, connection: "closed" }, null, "disconnected");
}

export function onCommandSent(model: UiModel): UiModel {
  return { ...model, pendingCommands: model.pendingCommands + 1 };
}

export function onMessage(model: UiModel, msg: GatewayMessage): UiModel {
  switch (msg.type) {
    case "session":
      return pushLog({ ...model, session: msg }, null,
        `session: mode ${msg.mode}, ${msg.output.va} VA unit`);
    case "snapshot":
      return applySnapshot(model, msg);
    case "ack":
      return {
        ...model,
        pendingCommands: Math.max(0, model.pendingCommands - 1),
      };
    case "err":
      return pushLog(
        { ...model, pendingCommands: Math.max(0, model.pendingCommands - 1) },
        model.latest?.sim_t_ms ?? null,
        `rejected: ${msg.code}`,
      );
  }
}

function applySnapshot(model: UiModel, snap: Snapshot): UiModel {
  let next: UiModel = {
    ...model,
    latest: snap,
    countdownMs: snap.agent_phase === "COUNTING" ? snap.remaining_ms : null,
  };
  const prev = model.latest;
  if (prev) {
    if (snap.source !== prev.source) {
      next = pushLog(next, snap.sim_t_ms, `source: ${prev.source} -> ${snap.source}`);
    }
    if (snap.agent_phase !== prev.agent_phase) {
      next = pushLog(next, snap.sim_t_ms, `agent: ${snap.agent_phase}`);
    }
    if (snap.fuse_blown && !prev.fuse_blown) {
      next = pushLog(next, snap.sim_t_ms, "FUSE BLOWN");
    }
    if (snap.charging !== prev.charging) {
      next = pushLog(next, snap.sim_t_ms,
        snap.charging ? "charger on" : "charger off");
    }
  }
  return next;
}
