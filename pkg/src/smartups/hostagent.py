"""PC-side emulation of the parallel-port link and the shutdown utility.

The MCU presents a status byte on the port: 255 while running on mains,
or the calibration-table byte with bit 0 cleared while on battery. When
the safe-battery signal arrives the host utility opens a 60-second window
for the user to save documents, then issues the (simulated) OS shutdown.
Mains restoration during the window cancels it; an explicit user
acknowledgment shuts down early.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

COUNTDOWN_MS = 60_000.0

# Trace tags emitted for agent events.
TAG_COUNTDOWN_START = "COUNTDOWN_START"
TAG_COUNTDOWN_CANCEL = "COUNTDOWN_CANCEL"
TAG_SHUTDOWN = "SHUTDOWN"


class DoubleShutdownError(RuntimeError):
    """The OS shutdown was issued twice in one session."""


@dataclass(frozen=True)
class PortFrame:
    t_us: int
    byte: int

    def __post_init__(self):
        if not 0 <= self.byte <= 255:
            raise ValueError("port byte must be 0..255")


class AgentPhase(Enum):
    IDLE = "IDLE"
    COUNTING = "COUNTING"
    SHUTDOWN_ISSUED = "SHUTDOWN_ISSUED"
    CANCELLED = "CANCELLED"


@dataclass(frozen=True)
class AgentState:
    phase: AgentPhase = AgentPhase.IDLE
    remaining_ms: float = 0.0
    user_acked: bool = False


class DecodedFrame(NamedTuple):
    on_battery: bool
    charging: bool
    level_byte: int
    anomalous: bool


def decode_frame(f: PortFrame) -> DecodedFrame:
    """Interpret one port byte.

    Bit 0 is the mains indicator (0 = running on battery); 255 is the
    normal on-mains idle byte. Odd bytes other than 255 still decode as
    on-mains by the bit rule but are flagged anomalous, since the firmware
    only ever emits 255 or even bytes. The port does not carry the charger
    line, so ``charging`` always reads False here; telemetry reports the
    charger state out of band.
    """
    on_battery = (f.byte & 1) == 0
    anomalous = not on_battery and f.byte != 255
    return DecodedFrame(on_battery=on_battery, charging=False,
                        level_byte=f.byte, anomalous=anomalous)


def agent_step(s: AgentState, shutdown_signal: bool, mains_restored: bool,
               user_ack: bool, dt_ms: float) -> AgentState:
    """Advance the agent by ``dt_ms`` and fold in this step's inputs.

    IDLE arms into COUNTING(60 s) on the shutdown signal. COUNTING counts
    down; mains restoration cancels (and wins any tie), a user ack or an
    exhausted countdown issues the shutdown. CANCELLED relaxes to IDLE on
    the next step; SHUTDOWN_ISSUED is terminal for the session.
    """
    if dt_ms < 0:
        raise ValueError("dt_ms must be >= 0")
    if s.phase is AgentPhase.SHUTDOWN_ISSUED:
        return s
    if s.phase is AgentPhase.CANCELLED:
        s = replace(s, phase=AgentPhase.IDLE, remaining_ms=0.0)
    if s.phase is AgentPhase.COUNTING:
        if mains_restored:
            return replace(s, phase=AgentPhase.CANCELLED, remaining_ms=0.0)
        if user_ack:
            return AgentState(AgentPhase.SHUTDOWN_ISSUED, 0.0, True)
        remaining = s.remaining_ms - dt_ms
        if remaining <= 0.0:
            return replace(s, phase=AgentPhase.SHUTDOWN_ISSUED, remaining_ms=0.0)
        return replace(s, remaining_ms=remaining)
    # IDLE
    if shutdown_signal:
        return AgentState(AgentPhase.COUNTING, COUNTDOWN_MS, False)
    return s


class ShutdownHook:
    """One-shot OS-shutdown effect; a session may shut down exactly once."""

    def __init__(self):
        self.fired = False

    def fire(self, agent: AgentState) -> str:
        """Emit the shutdown trace tag. The caller drops the load to 0 W
        at the same timestamp."""
        if agent.phase is not AgentPhase.SHUTDOWN_ISSUED:
            raise RuntimeError("shutdown effect requires phase SHUTDOWN_ISSUED")
        if self.fired:
            raise DoubleShutdownError("OS shutdown already issued this session")
        self.fired = True
        return TAG_SHUTDOWN
