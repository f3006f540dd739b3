/**
 * Browser bridge: exposes the gateway's TCP protocol over plain HTTP so
 * the console page needs nothing beyond fetch/EventSource.
 *
 *   GET  /            console page
 *   GET  /dist/*.js   compiled modules
 *   GET  /stream      server-sent events; each gateway line becomes one event
 *   POST /cmd         body = command JSON, forwarded on the shared connection
 *
 * The bridge holds a single gateway connection (the simulator allows one
 * writer) and fans the stream out to every page.
 *
 *   node dist/bridge.js [--gateway-host H] [--gateway-port P] [--http-port P]
 */

import fs from "node:fs";
import http from "node:http";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { HELLO_LINE, LineSplitter } from "./protocol.js";

const argv = process.argv.slice(2);
function arg(name: string, fallback: string): string {
  const i = argv.indexOf(name);
  return i >= 0 && argv[i + 1] !== undefined ? argv[i + 1]! : fallback;
}

const GATEWAY_HOST = arg("--gateway-host", "127.0.0.1");
const GATEWAY_PORT = Number(arg("--gateway-port", "7817"));
const HTTP_PORT = Number(arg("--http-port", "8147"));

const here = path.dirname(fileURLToPath(import.meta.url));
const root = path.resolve(here, "..");

const subscribers = new Set<http.ServerResponse>();
let gateway: net.Socket | null = null;
let sessionLine: string | null = null;   // replayed to late subscribers

function connectGateway(): void {
  const sock = net.createConnection({ host: GATEWAY_HOST, port: GATEWAY_PORT });
  const splitter = new LineSplitter();
  sock.setEncoding("utf8");
  sock.once("connect", () => {
    console.log(`bridge: connected to gateway ${GATEWAY_HOST}:${GATEWAY_PORT}`);
    sock.write(HELLO_LINE);
  });
  sock.on("data", (chunk: string) => {
    for (const line of splitter.push(chunk)) {
      if (line.includes('"type": "session"') || line.includes('"type":"session"')) {
        sessionLine = line;
      }
      const frame = `data: ${line}\n\n`;
      for (const res of subscribers) res.write(frame);
    }
  });
  const retry = () => {
    gateway = null;
    for (const res of subscribers) res.write("event: gone\ndata: {}\n\n");
    setTimeout(connectGateway, 1000);
  };
  sock.once("error", retry);
  sock.once("close", () => { /* error handler drives the retry */ });
  gateway = sock;
}

const PAGES: Record<string, { file: string; mime: string }> = {
  "/": { file: "index.html", mime: "text/html; charset=utf-8" },
};

const server = http.createServer((req, res) => {
  const url = (req.url ?? "/").split("?")[0] ?? "/";
  if (req.method === "GET" && url === "/stream") {
    res.writeHead(200, {
      "content-type": "text/event-stream",
      "cache-control": "no-cache",
      connection: "keep-alive",
    });
    res.write(":ok\n\n");
    if (sessionLine) res.write(`data: ${sessionLine}\n\n`);
    subscribers.add(res);
    req.on("close", () => subscribers.delete(res));
    return;
  }
  if (req.method === "POST" && url === "/cmd") {
    let body = "";
    req.on("data", (c) => (body += c));
    req.on("end", () => {
      if (gateway && body.length > 0 && body.length < 4096) {
        gateway.write(body.trim() + "\n");
        res.writeHead(202).end();
      } else {
        res.writeHead(503).end();
      }
    });
    return;
  }
  if (req.method === "GET") {
    const page = PAGES[url];
    const rel = page ? page.file : url.replace(/^\//, "");
    const file = path.resolve(root, rel);
    if (file.startsWith(root) && fs.existsSync(file) && fs.statSync(file).isFile()) {
      const mime = page?.mime
        ?? (file.endsWith(".js") ? "text/javascript" : "application/octet-stream");
      res.writeHead(200, { "content-type": mime });
      fs.createReadStream(file).pipe(res);
      return;
    }
  }
  res.writeHead(404).end();
});

connectGateway();
server.listen(HTTP_PORT, "127.0.0.1", () => {
  console.log(`bridge: console at http://127.0.0.1:${HTTP_PORT}/`);
});
