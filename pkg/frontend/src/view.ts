/**
 * Pure presentation: UiModel + control positions -> a View description.
 *
 * The View is plain data so it can be asserted in tests and painted by any
 * backend (the DOM painter lives in dom.ts). Physical readings are copied
 * verbatim from the latest snapshot; the renderer adds no interpolation.
 */

import type { UiModel } from "./model.js";

/** Reference PC part list with its per-part draw; the toggles sum to 484 W. */
export const LOAD_PARTS: ReadonlyArray<{ label: string; watts: number }> = [
  { label: "Motherboard", watts: 30 },
  { label: "CPU 550 MHz", watts: 30 },
  { label: "HDD 7200 rpm", watts: 15 },
  { label: "RAM 128 MB", watts: 10 },
  { label: "CD-ROM 50x", watts: 25 },
  { label: "Network card", watts: 4 },
  { label: "Floppy drive", watts: 5 },
  { label: "PCI card", watts: 5 },
  { label: "AGP card", watts: 30 },
  { label: "Monitor", watts: 330 },
];

export const DIMMER_MIN_V = 0;
export const DIMMER_MAX_V = 260;

export interface ControlsState {
  dimmerVolts: number;
  partsEnabled: boolean[];
}

export function defaultControls(): ControlsState {
  return { dimmerVolts: 220, partsEnabled: LOAD_PARTS.map(() => true) };
}

export function partsWatts(enabled: boolean[]): number {
  return LOAD_PARTS.reduce(
    (sum, part, i) => sum + (enabled[i] ? part.watts : 0), 0);
}

export interface View {
  connected: boolean;
  reconnectBanner: boolean;
  controlsDisabled: boolean;
  sourceBanner: { text: string; tone: "ok" | "backup" | "dead" };
  faultBanner: string | null;
  dimmer: { volts: number; min: number; max: number };
  toggles: Array<{ label: string; watts: number; enabled: boolean }>;
  togglesTotalW: number;
  mains: { volts: string };
  battery: { volts: string; pct: string; charging: boolean };
  relays: { rla1: boolean; rla2: boolean };
  load: { volts: string; watts: string };
  modal: { remainingS: number; message: string; ackLabel: string } | null;
  log: string[];
}

export function render(model: UiModel, controls: ControlsState): View {
  const snap = model.latest;
  const connected = model.connection === "open";
  const disabled = !connected;

  let banner: View["sourceBanner"] = { text: "NO TELEMETRY", tone: "dead" };
  if (snap) {
    banner =
      snap.source === "MAINS"
        ? { text: "MAINS", tone: "ok" }
        : snap.source === "INVERTER"
          ? { text: "INVERTER", tone: "backup" }
          : { text: "NO SUPPLY", tone: "dead" };
  }

  const modal =
    snap && snap.agent_phase === "COUNTING" && model.countdownMs !== null
      ? {
          remainingS: Math.ceil(model.countdownMs / 1000),
          message: "Battery at safe limit - shutting down when the timer ends.",
          ackLabel: "Documents saved - shut down now",
        }
      : null;

  return {
    connected,
    reconnectBanner: model.connection === "closed",
    controlsDisabled: disabled,
    sourceBanner: banner,
    faultBanner: snap?.fuse_blown ? "FUSE BLOWN - unit offline" : null,
    dimmer: { volts: controls.dimmerVolts, min: DIMMER_MIN_V, max: DIMMER_MAX_V },
    toggles: LOAD_PARTS.map((part, i) => ({
      label: part.label,
      watts: part.watts,
      enabled: controls.partsEnabled[i] ?? false,
    })),
    togglesTotalW: partsWatts(controls.partsEnabled),
    mains: { volts: snap ? snap.mains_v.toFixed(1) : "-" },
    battery: {
      volts: snap ? snap.batt_v.toFixed(2) : "-",
      pct: snap ? snap.soc_pct.toFixed(1) : "-",
      charging: snap?.charging ?? false,
    },
    relays: { rla1: snap?.rla1 ?? false, rla2: snap?.rla2 ?? false },
    load: {
      volts: snap ? snap.load_v.toFixed(1) : "-",
      watts: snap ? snap.load_w.toFixed(0) : "-",
    },
    modal,
    log: model.log.map((e) =>
      e.simTMs === null ? e.text : `[${(e.simTMs / 1000).toFixed(1)}s] ${e.text}`),
  };
}
