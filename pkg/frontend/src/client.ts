/**
 * Node-side gateway client: one TCP connection, hello handshake, reducer
 * updates on every message. Used by the bundled bridge and by the
 * integration tests; browsers reach the gateway through the bridge.
 */

import net from "node:net";

import {
  initialModel,
  onConnected,
  onDisconnected,
  onCommandSent,
  onMessage,
  type UiModel,
} from "./model.js";
import {
  HELLO_LINE,
  LineSplitter,
  encodeCommand,
  parseMessage,
  type Command,
  type GatewayMessage,
} from "./protocol.js";

export class GatewayClient {
  model: UiModel = initialModel();

  private sock: net.Socket | null = null;
  private splitter = new LineSplitter();
  private listeners: Array<(m: UiModel) => void> = [];
  private rawListeners: Array<(m: GatewayMessage) => void> = [];

  connect(host: string, port: number, timeoutMs = 10000): Promise<void> {
    return new Promise((resolve, reject) => {
      const sock = net.createConnection({ host, port });
      this.sock = sock;
      const timer = setTimeout(
        () => reject(new Error("session handshake timed out")), timeoutMs);
      sock.setEncoding("utf8");
      sock.once("connect", () => {
        this.update(onConnected(this.model));
        sock.write(HELLO_LINE);
      });
      sock.on("data", (chunk: string) => {
        for (const line of this.splitter.push(chunk)) {
          const msg = parseMessage(line);
          if (!msg) continue;
          this.update(onMessage(this.model, msg));
          for (const cb of this.rawListeners) cb(msg);
          if (msg.type === "session") {
            clearTimeout(timer);
            resolve();
          }
        }
      });
      sock.on("error", (err) => {
        clearTimeout(timer);
        this.update(onDisconnected(this.model));
        reject(err);
      });
      sock.on("close", () => {
        if (this.model.connection !== "closed") {
          this.update(onDisconnected(this.model));
        }
      });
    });
  }

  send(cmd: Command): void {
    if (!this.sock) throw new Error("not connected");
    this.update(onCommandSent(this.model));
    this.sock.write(encodeCommand(cmd));
  }

  onChange(cb: (m: UiModel) => void): void {
    this.listeners.push(cb);
  }

  onRaw(cb: (m: GatewayMessage) => void): void {
    this.rawListeners.push(cb);
  }

  /** Resolve once the model satisfies the predicate; for tests and scripts. */
  waitFor(pred: (m: UiModel) => boolean, timeoutMs = 30000): Promise<UiModel> {
    if (pred(this.model)) return Promise.resolve(this.model);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        this.listeners = this.listeners.filter((l) => l !== probe);
        reject(new Error("condition not reached in time"));
      }, timeoutMs);
      const probe = (m: UiModel) => {
        if (pred(m)) {
          clearTimeout(timer);
          this.listeners = this.listeners.filter((l) => l !== probe);
          resolve(m);
        }
      };
      this.listeners.push(probe);
    });
  }

  close(): void {
    this.sock?.destroy();
    this.sock = null;
  }

  private update(next: UiModel): void {
    this.model = next;
    for (const cb of this.listeners) cb(next);
  }
}
