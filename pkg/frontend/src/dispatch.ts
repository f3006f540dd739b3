/**
 * Maps operator gestures onto gateway commands. Kept separate from the
 * transport so both the browser entry and tests share the exact mapping.
 */

import type { Command } from "./protocol.js";
import { partsWatts } from "./view.js";

export function dimmerReleased(volts: number): Command {
  return { kind: "set_mains", volts };
}

export function togglesChanged(partsEnabled: boolean[]): Command {
  return { kind: "set_load", watts: partsWatts(partsEnabled) };
}

export function shutdownAcknowledged(): Command {
  return { kind: "user_ack" };
}

export function speedSelected(speed: "realtime" | "fast"): Command {
  return { kind: "set_speed", speed };
}

export function pauseToggled(paused: boolean): Command {
  return paused ? { kind: "pause" } : { kind: "resume" };
}
