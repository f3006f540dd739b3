/**
 * Wire types and framing for the gateway's line-delimited JSON protocol.
 *
 * One JSON object per line over a single TCP connection. The client opens
 * with {"type":"hello"}; the server answers with a session description and
 * then streams snapshots, interleaved with command acks/errors.
 */

export interface Thresholds {
  switch_ac_v: number;
  safe_battery_v: number;
  charge_start_v: number;
  charge_full_v: number;
}

export interface Session {
  type: "session";
  version: string;
  mode: string;
  speed: string;
  thresholds: Thresholds;
  battery: { nominal_v: number; capacity_ah: number };
  output: { volts: number; freq_hz: number; va: number };
}

export type Source = "MAINS" | "INVERTER" | "NONE";
export type AgentPhase = "IDLE" | "COUNTING" | "SHUTDOWN_ISSUED" | "CANCELLED";

export interface Snapshot {
  type: "snapshot";
  seq: number;
  sim_t_ms: number;
  mains_v: number;
  source: Source;
  batt_v: number;
  soc_pct: number;
  charging: boolean;
  rla1: boolean;
  rla2: boolean;
  load_v: number;
  load_w: number;
  agent_phase: AgentPhase;
  remaining_ms: number;
  fuse_blown: boolean;
}

export interface Ack {
  type: "ack";
  apply_t_ms: number;
}

export interface Err {
  type: "err";
  code: string;
}

export type GatewayMessage = Session | Snapshot | Ack | Err;

export type Command =
  | { kind: "set_mains"; volts: number }
  | { kind: "set_load"; watts: number }
  | { kind: "user_ack" }
  | { kind: "set_speed"; speed: "realtime" | "fast" }
  | { kind: "pause" }
  | { kind: "resume" };

export const HELLO_LINE = JSON.stringify({ type: "hello" }) + "\n";

export function encodeCommand(cmd: Command): string {
  return JSON.stringify({ type: "cmd", ...cmd }) + "\n";
}

/** Parse one line; returns null for anything that is not a known message. */
export function parseMessage(line: string): GatewayMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (type === "session" || type === "snapshot" || type === "ack" || type === "err") {
    return obj as GatewayMessage;
  }
  return null;
}

/** Accumulates stream chunks and yields complete lines. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const parts = this.buffer.split("\n");
    this.buffer = parts.pop() ?? "";
    return parts.filter((p) => p.length > 0);
  }
}
