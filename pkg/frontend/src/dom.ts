/**
 * DOM painter: builds the console layout once and patches it from View
 * objects. All display logic lives in view.ts; this file only moves
 * strings and flags into elements.
 */

import type { View } from "./view.js";
import { LOAD_PARTS } from "./view.js";

export interface Handlers {
  onDimmerRelease(volts: number): void;
  onToggle(index: number, enabled: boolean): void;
  onAck(): void;
  onSpeed(speed: "realtime" | "fast"): void;
}

interface Refs {
  reconnect: HTMLElement;
  banner: HTMLElement;
  fault: HTMLElement;
  dimmer: HTMLInputElement;
  dimmerLabel: HTMLElement;
  toggles: HTMLInputElement[];
  totalW: HTMLElement;
  mainsV: HTMLElement;
  battV: HTMLElement;
  battPct: HTMLElement;
  battFill: HTMLElement;
  charging: HTMLElement;
  rla1: HTMLElement;
  rla2: HTMLElement;
  loadV: HTMLElement;
  loadW: HTMLElement;
  modal: HTMLElement;
  modalTimer: HTMLElement;
  modalMsg: HTMLElement;
  ackButton: HTMLButtonElement;
  log: HTMLElement;
  speed: HTMLSelectElement;
}

function el(tag: string, cls: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text) node.textContent = text;
  return node;
}

export function buildConsole(mount: HTMLElement, handlers: Handlers): Refs {
  mount.innerHTML = "";

  const reconnect = el("div", "reconnect", "connection lost - reconnecting");
  const banner = el("div", "banner", "NO TELEMETRY");
  const fault = el("div", "fault");

  const dimmerLabel = el("span", "dimmer-label", "220 V");
  const dimmer = document.createElement("input");
  dimmer.type = "range";
  dimmer.min = "0";
  dimmer.max = "260";
  dimmer.value = "220";
  dimmer.addEventListener("input", () => {
    dimmerLabel.textContent = `${dimmer.value} V`;
  });
  dimmer.addEventListener("change", () =>
    handlers.onDimmerRelease(Number(dimmer.value)));
  const dimmerRow = el("label", "dimmer-row", "Mains dimmer ");
  dimmerRow.append(dimmer, dimmerLabel);

  const toggles: HTMLInputElement[] = [];
  const toggleBox = el("fieldset", "toggles");
  toggleBox.append(el("legend", "", "PC load"));
  LOAD_PARTS.forEach((part, i) => {
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => handlers.onToggle(i, box.checked));
    const row = el("label", "toggle-row", ` ${part.label} (${part.watts} W)`);
    row.prepend(box);
    toggleBox.append(row);
    toggles.push(box);
  });
  const totalW = el("div", "total", "484 W");
  toggleBox.append(totalW);

  const mainsV = el("span", "value");
  const battV = el("span", "value");
  const battPct = el("span", "value");
  const battFill = el("div", "gauge-fill");
  const gauge = el("div", "gauge");
  gauge.append(battFill);
  const charging = el("span", "pill");
  const rla1 = el("span", "relay", "RLA1");
  const rla2 = el("span", "relay", "RLA2");
  const loadV = el("span", "value");
  const loadW = el("span", "value");

  const meters = el("div", "meters");
  for (const [label, node] of [
    ["Mains", mainsV], ["Battery", battV], ["Charge", battPct],
    ["Load", loadV], ["Draw", loadW],
  ] as const) {
    const row = el("div", "meter", `${label}: `);
    row.append(node);
    meters.append(row);
  }
  meters.append(gauge, charging, rla1, rla2);

  const modalMsg = el("p", "modal-msg");
  const modalTimer = el("div", "modal-timer");
  const ackButton = document.createElement("button");
  ackButton.addEventListener("click", () => handlers.onAck());
  const modal = el("div", "modal hidden");
  modal.append(el("h2", "", "Shutdown pending"), modalMsg, modalTimer, ackButton);

  const speed = document.createElement("select");
  for (const value of ["realtime", "fast"]) {
    const opt = document.createElement("option");
    opt.value = value;
    opt.textContent = value;
    speed.append(opt);
  }
  speed.addEventListener("change", () =>
    handlers.onSpeed(speed.value as "realtime" | "fast"));

  const log = el("pre", "log");

  mount.append(reconnect, banner, fault, dimmerRow, toggleBox, meters,
               speed, log, modal);
  return {
    reconnect, banner, fault, dimmer: dimmer as HTMLInputElement, dimmerLabel,
    toggles, totalW, mainsV, battV, battPct, battFill, charging, rla1, rla2,
    loadV, loadW, modal, modalTimer, modalMsg, ackButton, log, speed,
  };
}

export function paint(refs: Refs, view: View): void {
  refs.reconnect.classList.toggle("hidden", !view.reconnectBanner);
  refs.banner.textContent = view.sourceBanner.text;
  refs.banner.dataset.tone = view.sourceBanner.tone;
  refs.fault.textContent = view.faultBanner ?? "";
  refs.fault.classList.toggle("hidden", view.faultBanner === null);

  refs.dimmer.disabled = view.controlsDisabled;
  refs.toggles.forEach((box) => (box.disabled = view.controlsDisabled));
  refs.speed.disabled = view.controlsDisabled;
  refs.ackButton.disabled = view.controlsDisabled;
  refs.totalW.textContent = `${view.togglesTotalW} W selected`;

  refs.mainsV.textContent = `${view.mains.volts} V`;
  refs.battV.textContent = `${view.battery.volts} V`;
  refs.battPct.textContent = `${view.battery.pct} %`;
  refs.battFill.style.width = view.battery.pct === "-" ? "0%"
    : `${view.battery.pct}%`;
  refs.charging.textContent = view.battery.charging ? "charging" : "idle";
  refs.rla1.dataset.on = String(view.relays.rla1);
  refs.rla2.dataset.on = String(view.relays.rla2);
  refs.loadV.textContent = `${view.load.volts} V`;
  refs.loadW.textContent = `${view.load.watts} W`;

  if (view.modal) {
    refs.modal.classList.remove("hidden");
    refs.modalMsg.textContent = view.modal.message;
    refs.modalTimer.textContent = `${view.modal.remainingS} s`;
    refs.ackButton.textContent = view.modal.ackLabel;
  } else {
    refs.modal.classList.add("hidden");
  }

  refs.log.textContent = view.log.slice(-12).join("\n");
}
