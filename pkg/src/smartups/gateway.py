"""Network boundary for live (serve-mode) simulation runs.

Newline-delimited JSON over a single TCP connection, default port 7817.
A client opens with ``{"type":"hello"}`` and receives the session
description; from then on it is subscribed to snapshots, emitted every
snapshot interval of simulated time plus immediately on any discrete
event. Commands (``{"type":"cmd","kind":...}``) are enqueued into the
simulation thread's bounded FIFO and take effect at the next loop
iteration; the acknowledgment carries the simulated time at which they
will apply.

Only the earliest still-connected client may mutate state (one operator,
any number of viewers); everyone else gets READ_ONLY rejections. No
simulation state is shared across threads: the sim loop owns the engine,
snapshots are immutable copies fanned out through per-client queues.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time
from dataclasses import dataclass, replace

from smartups import __version__
from smartups.hostagent import AgentPhase
from smartups.plant import NOMINAL_OUTPUT_V, RATED_OUTPUT_VA
from smartups.scenario import ScenarioEvent, SimConfig, Simulation, TraceRecord

DEFAULT_PORT = 7817
MAINS_COMMAND_MAX_V = 260.0
LOAD_COMMAND_MAX_W = 650.0
COMMAND_QUEUE_DEPTH = 64
CLIENT_QUEUE_DEPTH = 256


@dataclass(frozen=True)
class Snapshot:
    seq: int
    sim_t_ms: float
    mains_v: float
    source: str
    batt_v: float
    soc_pct: float
    charging: bool
    rla1: bool
    rla2: bool
    load_v: float
    load_w: float
    agent_phase: str
    remaining_ms: float
    fuse_blown: bool

    def to_message(self) -> dict:
        msg = {"type": "snapshot"}
        msg.update(self.__dict__)
        return msg


def snapshot_from_row(seq: int, row: TraceRecord, sim: Simulation) -> Snapshot:
    """Snapshot carrying the same fields the trace row would carry."""
    return Snapshot(
        seq=seq,
        sim_t_ms=row.t_ms,
        mains_v=row.mains_v,
        source=row.source,
        batt_v=row.batt_v,
        soc_pct=row.soc_pct,
        charging=row.charging,
        rla1=row.rla1,
        rla2=row.rla2,
        load_v=row.load_v,
        load_w=sim.load_w,
        agent_phase=row.agent_phase,
        remaining_ms=sim.agent.remaining_ms,
        fuse_blown=sim.fuse_blown,
    )


def session_hello(cfg: SimConfig, speed: str) -> dict:
    """Static session description so clients can render correct scales."""
    th = cfg.thresholds
    return {
        "type": "session",
        "version": __version__,
        "mode": cfg.controller_mode.value,
        "speed": speed,
        "thresholds": {
            "switch_ac_v": th.switch_ac_v,
            "safe_battery_v": th.safe_battery_v,
            "charge_start_v": th.charge_start_v,
            "charge_full_v": th.charge_full_v,
        },
        "battery": {
            "nominal_v": cfg.battery.nominal_v,
            "capacity_ah": cfg.battery.capacity_ah,
        },
        "output": {
            "volts": NOMINAL_OUTPUT_V,
            "freq_hz": cfg.mains_freq_hz,
            "va": RATED_OUTPUT_VA,
        },
    }


class _Client:
    def __init__(self, conn: socket.socket, addr, client_id: int):
        self.conn = conn
        self.addr = addr
        self.id = client_id
        self.outbox: queue.Queue = queue.Queue(maxsize=CLIENT_QUEUE_DEPTH)
        self.subscribed = False
        self.alive = True


class GatewayServer:
    """Serve-mode driver: owns the simulation thread and the listener."""

    def __init__(self, cfg: SimConfig | None = None, *,
                 host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 speed: str = "realtime", snapshot_interval_ms: float = 100.0,
                 events: list[ScenarioEvent] | None = None,
                 end_us: int | None = None):
        if snapshot_interval_ms < 50:
            raise ValueError("snapshot interval must be >= 50 ms")
        cfg = cfg or SimConfig()
        # snapshots ride the engine's trace cadence so shared fields always
        # agree with the rows a batch run would emit
        cfg = replace(cfg, trace_every_ms=snapshot_interval_ms)
        self.cfg = cfg
        if end_us is None:
            end_us = cfg.max_duration_ms * 1000
        self.sim = Simulation(events or [], cfg, end_us=end_us)
        self.speed = speed
        self.host = host
        self.port = port

        self._commands: queue.Queue = queue.Queue(maxsize=COMMAND_QUEUE_DEPTH)
        self._clients: dict[int, _Client] = {}
        self._clients_lock = threading.Lock()
        self._next_client_id = 1
        self._seq = 0
        self._paused = False
        self._wake = threading.Event()
        self._running = False
        self._next_apply_ms = 0.0
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        """Bind the listener and start the sim + accept threads."""
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((self.host, self.port))
        self.port = self._listener.getsockname()[1]
        self._listener.listen(8)
        self._running = True
        for target in (self._accept_loop, self._sim_loop):
            th = threading.Thread(target=target, daemon=True)
            th.start()
            self._threads.append(th)

    def serve_forever(self) -> None:
        self.start()
        try:
            while self._running and not self.sim.finished:
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.close()

    def close(self) -> None:
        self._running = False
        self._wake.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._clients_lock:
            clients = list(self._clients.values())
        for c in clients:
            self._drop_client(c)
        for th in self._threads:
            th.join(timeout=2.0)

    # -- simulation thread ----------------------------------------------------

    def _sim_loop(self) -> None:
        wall_anchor = time.monotonic()
        sim_anchor = self.sim.now_us
        while self._running and not self.sim.finished:
            self._drain_commands()
            if self._paused:
                # a paused loop emits no periodic snapshots
                self._wake.wait(timeout=0.1)
                self._wake.clear()
                wall_anchor = time.monotonic()
                sim_anchor = self.sim.now_us
                continue
            t_next = self.sim.peek_next_us()
            self._next_apply_ms = t_next / 1000.0
            if self.speed == "realtime":
                # cumulative pacing against the anchors avoids drift
                lag = (t_next - sim_anchor) / 1e6 - (time.monotonic() - wall_anchor)
                if lag > 0:
                    self._wake.wait(timeout=min(lag, 0.25))
                    self._wake.clear()
                    continue
            else:
                wall_anchor = time.monotonic()
                sim_anchor = self.sim.now_us
            for row in self.sim.advance():
                self._broadcast(row)

    def _drain_commands(self) -> None:
        while True:
            try:
                kind, value = self._commands.get_nowait()
            except queue.Empty:
                return
            if kind == "set_mains":
                self.sim.set_mains(value)
            elif kind == "set_load":
                self.sim.set_load(value)
            elif kind == "user_ack":
                self.sim.user_ack()

    def _broadcast(self, row: TraceRecord) -> None:
        self._seq += 1
        with self._clients_lock:
            clients = [c for c in self._clients.values() if c.subscribed]
        if not clients:
            return
        snap = snapshot_from_row(self._seq, row, self.sim)
        line = (json.dumps(snap.to_message(), separators=(",", ":")) + "\n").encode()
        for c in clients:
            # Backpressure: a fast-mode sim outruns any socket, so the loop
            # paces itself to its subscribers rather than dropping them
            # (streams must have no seq gaps). Snapshots stop short of the
            # queue bound so command replies always have slots. A consumer
            # that stays wedged for ~2 s is treated as gone and its stream
            # ends silently.
            delivered = False
            for _ in range(200):
                if not (c.alive and self._running):
                    delivered = True
                    break
                if c.outbox.qsize() < CLIENT_QUEUE_DEPTH - 8:
                    try:
                        c.outbox.put_nowait(line)
                        delivered = True
                        break
                    except queue.Full:
                        pass
                time.sleep(0.01)
            if not delivered:
                self._drop_client(c)

    # -- network threads -------------------------------------------------------

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, addr = self._listener.accept()
            except OSError:
                return
            with self._clients_lock:
                client = _Client(conn, addr, self._next_client_id)
                self._next_client_id += 1
                self._clients[client.id] = client
            threading.Thread(target=self._reader, args=(client,), daemon=True).start()
            threading.Thread(target=self._writer, args=(client,), daemon=True).start()

    def _writer(self, client: _Client) -> None:
        while client.alive:
            try:
                line = client.outbox.get(timeout=0.2)
            except queue.Empty:
                continue
            try:
                client.conn.sendall(line)
            except OSError:
                self._drop_client(client)
                return

    def _reader(self, client: _Client) -> None:
        try:
            buf = client.conn.makefile("rb")
            for raw in buf:
                reply = self._handle_message(client, raw)
                if reply is None:
                    continue
                try:
                    client.outbox.put_nowait(
                        (json.dumps(reply, separators=(",", ":")) + "\n").encode())
                except queue.Full:
                    break   # consumer long gone
        except OSError:
            pass
        finally:
            self._drop_client(client)

    def _handle_message(self, client: _Client, raw: bytes) -> dict | None:
        try:
            msg = json.loads(raw)
            mtype = msg["type"]
        except (ValueError, KeyError, TypeError):
            return {"type": "err", "code": "BAD_MESSAGE"}
        if mtype == "hello":
            client.subscribed = True
            return session_hello(self.cfg, self.speed)
        if mtype == "cmd":
            return self._apply_command(client, msg)
        return {"type": "err", "code": "BAD_MESSAGE"}

    def _is_writer(self, client: _Client) -> bool:
        with self._clients_lock:
            ids = [c.id for c in self._clients.values() if c.alive]
        return bool(ids) and client.id == min(ids)

    def _apply_command(self, client: _Client, msg: dict) -> dict:
        kind = msg.get("kind")
        if kind not in {"set_mains", "set_load", "user_ack",
                        "set_speed", "pause", "resume"}:
            return {"type": "err", "code": "BAD_MESSAGE"}
        if not self._is_writer(client):
            return {"type": "err", "code": "READ_ONLY"}

        if kind == "set_mains":
            volts = msg.get("volts")
            if not isinstance(volts, (int, float)) or not 0 <= volts <= MAINS_COMMAND_MAX_V:
                return {"type": "err", "code": "OUT_OF_RANGE"}
            return self._enqueue(kind, float(volts))
        if kind == "set_load":
            watts = msg.get("watts")
            if not isinstance(watts, (int, float)) or not 0 <= watts <= LOAD_COMMAND_MAX_W:
                return {"type": "err", "code": "OUT_OF_RANGE"}
            return self._enqueue(kind, float(watts))
        if kind == "user_ack":
            if self.sim.agent.phase is not AgentPhase.COUNTING:
                return {"type": "err", "code": "INVALID_STATE"}
            return self._enqueue(kind, None)

        # loop controls act immediately, not through the sim queue
        if kind == "set_speed":
            speed = msg.get("speed")
            if speed not in ("realtime", "fast"):
                return {"type": "err", "code": "OUT_OF_RANGE"}
            self.speed = speed
            self._wake.set()
        elif kind == "pause":
            self._paused = True
            self._wake.set()
        else:   # resume
            self._paused = False
            self._wake.set()
        return {"type": "ack", "apply_t_ms": self.sim.now_us / 1000.0}

    def _enqueue(self, kind: str, value) -> dict:
        try:
            self._commands.put_nowait((kind, value))
        except queue.Full:
            return {"type": "err", "code": "QUEUE_FULL"}
        self._wake.set()
        return {"type": "ack", "apply_t_ms": self._next_apply_ms}

    def _drop_client(self, client: _Client) -> None:
        client.alive = False
        with self._clients_lock:
            self._clients.pop(client.id, None)
        try:
            client.conn.close()
        except OSError:
            pass
