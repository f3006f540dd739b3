/**
 * Browser entry: EventSource from the bridge in, command POSTs out.
 */

import { buildConsole, paint, type Handlers } from "./dom.js";
import {
  initialModel,
  onConnected,
  onDisconnected,
  onMessage,
  type UiModel,
} from "./model.js";
import { parseMessage, type Command } from "./protocol.js";
import { defaultControls, render } from "./view.js";
import {
  dimmerReleased,
  shutdownAcknowledged,
  speedSelected,
  togglesChanged,
} from "./dispatch.js";

let model: UiModel = initialModel();
const controls = defaultControls();

function sendCommand(cmd: Command): void {
  void fetch("/cmd", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ type: "cmd", ...cmd }),
  });
}

const handlers: Handlers = {
  onDimmerRelease(volts) {
    controls.dimmerVolts = volts;
    sendCommand(dimmerReleased(volts));
  },
  onToggle(index, enabled) {
    controls.partsEnabled[index] = enabled;
    sendCommand(togglesChanged(controls.partsEnabled));
  },
  onAck() {
    sendCommand(shutdownAcknowledged());
  },
  onSpeed(speed) {
    sendCommand(speedSelected(speed));
  },
};

const mount = document.getElementById("console");
if (!mount) throw new Error("missing #console mount point");
const refs = buildConsole(mount, handlers);

function update(next: UiModel): void {
  model = next;
  paint(refs, render(model, controls));
}

const stream = new EventSource("/stream");
stream.onopen = () => update(onConnected(model));
stream.onerror = () => update(onDisconnected(model));
stream.onmessage = (ev) => {
  const msg = parseMessage(ev.data);
  if (msg) update(onMessage(model, msg));
};
stream.addEventListener("gone", () => update(onDisconnected(model)));

update(model);
