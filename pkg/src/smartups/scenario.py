"""Deterministic discrete-event engine binding plant, controller and agent.

Time is an integer microsecond clock. The loop visits "boundaries": timer
ticks (every 62501 us), scenario-event timestamps, periodic trace times,
the agent's countdown deadline, and the end of the run. Between
boundaries nothing samples the plant, so the battery is integrated across
the gap in exact plant-dt substeps by the hot-loop kernel (compiled when
available) - observationally identical to stepping every grid point.

Within one boundary the order is fixed: scenario events, then the
controller tick (if due), then the agent step, then the fuse check, then
the trace row. Trace rows appear at every trace_every_ms multiple plus
one row per discrete event (relay transfer, countdown start/cancel,
shutdown, fuse blow); coincident events share a row with `+`-joined tags.

Traces are byte-identical for identical (script, config) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from smartups import _kernel as K
from smartups.controller import (
    CHARGE_CURRENT_A,
    ControllerMode,
    McuState,
    PpDataTable,
    Thresholds,
    control_step,
    default_ppdata,
    mcu_reset,
)
from smartups.hostagent import (
    TAG_COUNTDOWN_CANCEL,
    TAG_COUNTDOWN_START,
    AgentPhase,
    AgentState,
    PortFrame,
    ShutdownHook,
    agent_step,
    decode_frame,
)
from smartups.plant import (
    INVERTER_MAX_LOAD_W,
    NOMINAL_BATTERY_V,
    NOMINAL_OUTPUT_V,
    PC_LOAD_W,
    AcSource,
    Battery,
    Fuse,
    InverterSpec,
    LoadSource,
    PlantState,
    battery_voltage,
    default_battery,
    default_fuse,
    fuse_check,
    inverter_output,
    regulate,
    rectify_filter,
    transformer_secondary,
    default_transformer,
    default_rectifier_filter,
    REGULATOR_15V,
    REGULATOR_5V,
)

TAG_TRANSFER_TO_INVERTER = "TRANSFER_MAINS_TO_INVERTER"
TAG_TRANSFER_TO_MAINS = "TRANSFER_INVERTER_TO_MAINS"
TAG_FUSE_BLOWN = "FUSE_BLOWN"

# The charger chain (transformer->rectifier->15 V rail at 2 A) billed to
# the mains side for fuse-current purposes.
CHARGER_INPUT_W = 30.0

TRACE_HEADER = ("t_ms,mains_v,source,batt_v,soc_pct,charging,"
                "rla1,rla2,load_v,pp_byte,agent_phase,event_tag")


class ScenarioError(Exception):
    """Base class for scenario-level failures."""


class ScenarioParseError(ScenarioError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MissingEndError(ScenarioError):
    def __init__(self):
        super().__init__("scenario has no `end <ms>` directive")


class EventKind(Enum):
    MAINS_SET = "MAINS_SET"
    LOAD_SET = "LOAD_SET"
    USER_ACK = "USER_ACK"
    END = "END"


@dataclass(frozen=True)
class ScenarioEvent:
    at_ms: int
    kind: EventKind
    value: float | None = None

    @property
    def at_us(self) -> int:
        return self.at_ms * 1000


@dataclass(frozen=True)
class TraceRecord:
    t_ms: float
    mains_v: float
    source: str
    batt_v: float
    soc_pct: float
    charging: bool
    rla1: bool
    rla2: bool
    load_v: float
    pp_byte: int
    agent_phase: str
    event_tag: str


@dataclass
class SimConfig:
    plant_dt_ms: float = 1.0
    trace_every_ms: float = 100.0
    controller_mode: ControllerMode = ControllerMode.SPECIFIED
    efficiency: float = 0.8
    thresholds: Thresholds = field(default_factory=Thresholds)
    battery: Battery = field(default_factory=default_battery)
    initial_mains_v: float = 220.0
    initial_load_w: float = PC_LOAD_W
    mains_freq_hz: float = 50.0
    max_duration_ms: int = 24 * 3600 * 1000   # runaway-script cap

    def __post_init__(self):
        self.plant_dt_us = _to_us(self.plant_dt_ms, "plant_dt_ms")
        self.trace_every_us = _to_us(self.trace_every_ms, "trace_every_ms")
        if self.plant_dt_us > self.trace_every_us:
            raise ValueError("plant_dt_ms must not exceed trace_every_ms")
        if self.trace_every_us % self.plant_dt_us != 0:
            raise ValueError("plant_dt_ms must divide trace_every_ms")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")
        if self.initial_mains_v < 0 or self.initial_load_w < 0:
            raise ValueError("initial mains/load must be >= 0")


def _to_us(ms: float, name: str) -> int:
    us = round(ms * 1000.0)
    if us < 1 or abs(us - ms * 1000.0) > 1e-6:
        raise ValueError(f"{name} must be a positive whole number of microseconds")
    return us


def parse_scenario(text: str) -> list[ScenarioEvent]:
    """Parse a scenario script into a sorted event list.

    Grammar, one directive per line, `#` starts a comment:

        at <ms> mains <volts>
        at <ms> load <watts>
        at <ms> ack
        end <ms>

    Exactly one `end` is required. Events are returned sorted by time,
    ties keeping file order.
    """
    events: list[ScenarioEvent] = []
    end_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if toks[0] == "end":
            if len(toks) != 2:
                raise ScenarioParseError(lineno, "expected `end <ms>`")
            if end_seen:
                raise ScenarioParseError(lineno, "duplicate `end` directive")
            end_seen = True
            events.append(ScenarioEvent(_parse_ms(lineno, toks[1]), EventKind.END))
        elif toks[0] == "at":
            if len(toks) < 3:
                raise ScenarioParseError(lineno, "expected `at <ms> <directive>`")
            ms = _parse_ms(lineno, toks[1])
            directive = toks[2]
            if directive == "mains":
                events.append(ScenarioEvent(
                    ms, EventKind.MAINS_SET,
                    _parse_value(lineno, toks, "mains <volts>")))
            elif directive == "load":
                events.append(ScenarioEvent(
                    ms, EventKind.LOAD_SET,
                    _parse_value(lineno, toks, "load <watts>")))
            elif directive == "ack":
                if len(toks) != 3:
                    raise ScenarioParseError(lineno, "expected `at <ms> ack`")
                events.append(ScenarioEvent(ms, EventKind.USER_ACK))
            else:
                raise ScenarioParseError(lineno, f"unknown directive {directive!r}")
        else:
            raise ScenarioParseError(lineno, f"unknown statement {toks[0]!r}")
    if not end_seen:
        raise MissingEndError()
    return sorted(events, key=lambda e: e.at_ms)


def _parse_ms(lineno: int, tok: str) -> int:
    try:
        ms = int(tok)
    except ValueError:
        raise ScenarioParseError(lineno, f"bad timestamp {tok!r}") from None
    if ms < 0:
        raise ScenarioParseError(lineno, "timestamp must be >= 0")
    return ms


def _parse_value(lineno: int, toks: list[str], shape: str) -> float:
    if len(toks) != 4:
        raise ScenarioParseError(lineno, f"expected `at <ms> {shape}`")
    try:
        value = float(toks[3])
    except ValueError:
        raise ScenarioParseError(lineno, f"bad number {toks[3]!r}") from None
    if not math.isfinite(value) or value < 0:
        raise ScenarioParseError(lineno, "value must be finite and >= 0")
    return value


class Simulation:
    """Single-threaded event loop over one scenario.

    Batch use goes through :func:`run`. Live (serve-mode) use drives
    :meth:`advance` one boundary at a time and injects operator commands
    with :meth:`set_mains` / :meth:`set_load` / :meth:`user_ack`, which
    take effect at the next processed boundary.
    """

    def __init__(self, events: list[ScenarioEvent], cfg: SimConfig | None = None,
                 end_us: int | None = None):
        self.cfg = cfg = cfg or SimConfig()
        ends = [e for e in events if e.kind is EventKind.END]
        if end_us is None:
            if len(ends) != 1:
                raise ScenarioError("scenario must carry exactly one END event")
            end_us = ends[0].at_us
        if end_us > cfg.max_duration_ms * 1000:
            raise ScenarioError(
                f"scenario runs past the {cfg.max_duration_ms} ms duration cap")
        self._end_us = end_us
        self._events = sorted((e for e in events if e.kind is not EventKind.END),
                              key=lambda e: e.at_ms)
        self._ev_i = 0
        self._live: list[ScenarioEvent] = []

        self._dt_us = cfg.plant_dt_us
        self._trace_us = cfg.trace_every_us

        self._mains = AcSource(cfg.initial_mains_v, cfg.mains_freq_hz, True)
        self._load_w = cfg.initial_load_w
        self._pf = 1.0
        self._fuse = default_fuse()
        self._cap = cfg.battery.capacity_ah
        self._charge = cfg.battery.charge_ah
        self._ve = cfg.battery.v_empty
        self._span = cfg.battery.v_full - cfg.battery.v_empty
        self._inv = InverterSpec(efficiency=cfg.efficiency)
        self._xfmr = default_transformer()
        self._rect = default_rectifier_filter()

        self._th = cfg.thresholds
        self._table = default_ppdata()
        self._mcu = mcu_reset(cfg.controller_mode)
        relays = (self._mcu.mains_ok and self._mcu.charger_active,
                  self._mcu.mains_ok)
        self._rla1, self._rla2 = relays

        self._agent = AgentState()
        self._agent_t_us = 0
        self._pending_ack = False
        self._hook = ShutdownHook()

        self._t = 0
        self._booted = False
        self.finished = False

    # -- public state views ------------------------------------------------

    @property
    def now_us(self) -> int:
        return self._t

    @property
    def agent(self) -> AgentState:
        return self._agent

    @property
    def load_w(self) -> float:
        return self._load_w

    @property
    def fuse_blown(self) -> bool:
        return self._fuse.blown

    def battery_volts(self) -> float:
        return self._ve + self._span * (self._charge / self._cap)

    def plant_state(self) -> PlantState:
        """Full electrical snapshot, including the regulated rails."""
        ac = self._sensed_ac_rms()
        secondary = transformer_secondary(ac, self._xfmr)
        dc, _ = rectify_filter(secondary, CHARGE_CURRENT_A if self._rla1 else 0.0,
                               self._rect, self._mains.frequency_hz or 50.0)
        batt_v = self.battery_volts()
        src, load_v = self._load_view()
        return PlantState(
            mains=self._mains,
            battery=Battery(self._cap, self._charge,
                            self.cfg.battery.nominal_v,
                            self.cfg.battery.v_full, self.cfg.battery.v_empty),
            fuse=self._fuse,
            rail_15v=regulate(dc, REGULATOR_15V),
            # the 5 V rail is fed from the rectifier or the battery, whichever
            # is higher, so the MCU stays powered through an outage
            rail_5v=regulate(max(dc, batt_v), REGULATOR_5V),
            load_v_rms=load_v,
            load_source=src,
            rla1_energized=self._rla1,
            rla2_energized=self._rla2,
        )

    # -- live stimulus injection (serve mode) ------------------------------

    def set_mains(self, volts: float) -> None:
        self._live.append(ScenarioEvent(0, EventKind.MAINS_SET, volts))

    def set_load(self, watts: float) -> None:
        self._live.append(ScenarioEvent(0, EventKind.LOAD_SET, watts))

    def user_ack(self) -> None:
        self._live.append(ScenarioEvent(0, EventKind.USER_ACK))

    # -- event loop ---------------------------------------------------------

    def peek_next_us(self) -> int:
        """Timestamp of the next boundary the loop will process."""
        if not self._booted:
            return 0
        cands = [self._mcu.next_tick_us, self._next_trace_us(), self._end_us]
        if self._ev_i < len(self._events):
            cands.append(self._events[self._ev_i].at_us)
        if self._agent.phase is AgentPhase.COUNTING:
            cands.append(self._agent_t_us
                         + max(1, math.ceil(self._agent.remaining_ms * 1000.0)))
        return min(cands)

    def advance(self) -> list[TraceRecord]:
        """Process the next boundary; returns the trace rows it emitted."""
        if self.finished:
            return []
        if not self._booted:
            self._booted = True
            return self._process_boundary(0)
        t_next = self.peek_next_us()
        self._integrate(self._t, t_next)
        self._t = t_next
        rows = self._process_boundary(t_next)
        if t_next >= self._end_us:
            self.finished = True
        return rows

    def _next_trace_us(self) -> int:
        return (self._t // self._trace_us + 1) * self._trace_us

    def _integrate(self, t0: int, t1: int) -> None:
        if t1 <= t0:
            return
        if self._rla1:
            # charging relay closed (only possible on mains)
            self._charge = K.step_const(self._charge, self._cap, CHARGE_CURRENT_A,
                                        *self._stride_s(t0, t1))
        elif not self._rla2 and 0.0 < self._load_w <= INVERTER_MAX_LOAD_W:
            self._charge = K.step_discharge(self._charge, self._cap, self._ve,
                                            self._span, self._load_w,
                                            self._inv.efficiency,
                                            *self._stride_s(t0, t1))

    def _stride_s(self, t0: int, t1: int) -> tuple[float, int, float, float]:
        """Split [t0, t1) into (first, n x full, last) plant-dt substeps."""
        dt = self._dt_us
        first_end = (t0 // dt + 1) * dt
        if first_end >= t1:
            return ((t1 - t0) / 1e6, 0, dt / 1e6, 0.0)
        n_full = (t1 - first_end) // dt
        last = t1 - first_end - n_full * dt
        return ((first_end - t0) / 1e6, n_full, dt / 1e6, last / 1e6)

    def _process_boundary(self, t: int) -> list[TraceRecord]:
        tags: list[str] = []

        # 1. stimuli scheduled for this instant, script first, then live
        while (self._ev_i < len(self._events)
               and self._events[self._ev_i].at_us <= t):
            self._apply_event(self._events[self._ev_i])
            self._ev_i += 1
        for ev in self._live:
            self._apply_event(ev)
        self._live.clear()

        # 2. controller tick
        if t == self._mcu.next_tick_us:
            self._mcu, relays, _, _ = control_step(
                self._mcu, self.battery_volts(), self._sensed_ac_rms(),
                self._th, self._table, now_us=t)
            if relays.rla2_energized != self._rla2:
                tags.append(TAG_TRANSFER_TO_MAINS if relays.rla2_energized
                            else TAG_TRANSFER_TO_INVERTER)
            self._rla1 = relays.rla1_energized
            self._rla2 = relays.rla2_energized

        # 3. host agent, fed from the decoded port frame and the latch
        decoded = decode_frame(PortFrame(t, self._mcu.pp_byte))
        prev_phase = self._agent.phase
        self._agent = agent_step(self._agent,
                                 shutdown_signal=self._mcu.shutdown_latched,
                                 mains_restored=not decoded.on_battery,
                                 user_ack=self._pending_ack,
                                 dt_ms=(t - self._agent_t_us) / 1000.0)
        self._pending_ack = False
        self._agent_t_us = t
        if self._agent.phase is not prev_phase:
            if self._agent.phase is AgentPhase.COUNTING:
                tags.append(TAG_COUNTDOWN_START)
            elif self._agent.phase is AgentPhase.CANCELLED:
                tags.append(TAG_COUNTDOWN_CANCEL)
            elif self._agent.phase is AgentPhase.SHUTDOWN_ISSUED:
                tags.append(self._hook.fire(self._agent))
                self._load_w = 0.0   # the PC powers off with the shutdown

        # 4. protection fuse sees the mains-side current of the new state
        blown_before = self._fuse.blown
        self._fuse = fuse_check(self._fuse, self._mains_current_a())
        if self._fuse.blown and not blown_before:
            tags.append(TAG_FUSE_BLOWN)

        # 5. trace row at periodic instants and for any discrete event
        if t % self._trace_us == 0 or tags:
            return [self._record(t, tags)]
        return []

    def _apply_event(self, ev: ScenarioEvent) -> None:
        if ev.kind is EventKind.MAINS_SET:
            self._mains = AcSource(ev.value, self._mains.frequency_hz, True)
        elif ev.kind is EventKind.LOAD_SET:
            self._load_w = ev.value
        elif ev.kind is EventKind.USER_ACK:
            self._pending_ack = True

    # -- electrical views ----------------------------------------------------

    def _sensed_ac_rms(self) -> float:
        """Post-fuse mains bus: what the comparator and the load's mains
        pole actually see."""
        if self._fuse.blown:
            return 0.0
        return self._mains.effective_rms

    def _inverter_rms(self) -> float:
        if self._load_w > INVERTER_MAX_LOAD_W:
            return 0.0   # protective cutout, non-latching
        ac, _, _ = inverter_output(self.battery_volts(), self._inv, self._load_w)
        return ac

    def _load_view(self) -> tuple[LoadSource, float]:
        if self._rla2:
            v = self._sensed_ac_rms()
            return (LoadSource.MAINS, v) if v > 0 else (LoadSource.NONE, 0.0)
        v = self._inverter_rms()
        return (LoadSource.INVERTER, v) if v > 0 else (LoadSource.NONE, 0.0)

    def _mains_current_a(self) -> float:
        v = self._sensed_ac_rms()
        if v <= 0:
            return 0.0
        watts = 0.0
        if self._rla2:
            watts += self._load_w / self._pf
        if self._rla1:
            watts += CHARGER_INPUT_W
        return watts / v

    def _record(self, t: int, tags: list[str]) -> TraceRecord:
        src, load_v = self._load_view()
        return TraceRecord(
            t_ms=t / 1000.0,
            mains_v=self._sensed_ac_rms(),
            source=src.value,
            batt_v=self.battery_volts(),
            soc_pct=100.0 * (self._charge / self._cap),
            charging=self._mcu.charger_active,
            rla1=self._rla1,
            rla2=self._rla2,
            load_v=load_v,
            pp_byte=self._mcu.pp_byte,
            agent_phase=self._agent.phase.value,
            event_tag="+".join(tags),
        )


def run(events: list[ScenarioEvent], cfg: SimConfig | None = None) -> list[TraceRecord]:
    """Run a parsed scenario to its END and return the full trace."""
    sim = Simulation(events, cfg)
    rows: list[TraceRecord] = []
    while not sim.finished:
        rows.extend(sim.advance())
    return rows


def write_trace(records: list[TraceRecord], destination) -> int:
    """Serialize trace rows as CSV; returns the byte count written.

    Output is byte-identical for identical inputs: floats carry exactly
    four decimals, flags are 0/1. ``destination`` is a path or a binary
    file-like object. I/O failures propagate as OSError.
    """
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(",".join((
            f"{r.t_ms:.4f}",
            f"{r.mains_v:.4f}",
            r.source,
            f"{r.batt_v:.4f}",
            f"{r.soc_pct:.4f}",
            "1" if r.charging else "0",
            "1" if r.rla1 else "0",
            "1" if r.rla2 else "0",
            f"{r.load_v:.4f}",
            str(r.pp_byte),
            r.agent_phase,
            r.event_tag,
        )))
    data = ("\n".join(lines) + "\n").encode("ascii")
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)
    return len(data)
