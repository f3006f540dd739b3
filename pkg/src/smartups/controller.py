"""Discrete emulation of the AT89C2051 control firmware.

The firmware hangs everything off a 16-bit Timer0 interrupt: the reload
bytes TH0=11/TL0=219 give a 3035 count, so the timer overflows every
65536-3035 = 62501 machine cycles (1 us each on the 12 MHz part). A pass
counter walks 8..1 per interrupt and the real control pass (ADC sample,
port-table lookup, charge decision, port update) runs only every 8th tick,
i.e. every 500.008 ms. Between control passes only the counter and the
next-deadline change; all outputs are held.

Two modes are emulated:

* SPECIFIED - the engineering intent: voltage thresholds 11.5/13.5 V for
  the charge hysteresis and 6.0 V for the safe-battery signal.
* LISTING - bit-faithful assembly semantics, including the forced ADC
  bit 0 before the table lookup and the "stop charging only on code 10"
  comparison quirk.

Both modes share the mains comparator and relay transfer behavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

# Timer0 runs in 16-bit mode; one machine cycle is 1 us at 12 MHz.
TIMER0_TH0 = 11
TIMER0_TL0 = 219
TIMER0_RELOAD = TIMER0_TH0 * 256 + TIMER0_TL0          # 3035
TICK_PERIOD_US = 65536 - TIMER0_RELOAD                 # 62501
CONTROL_CADENCE_TICKS = 8                              # "mov Ctr,#8"
CONTROL_PERIOD_US = CONTROL_CADENCE_TICKS * TICK_PERIOD_US

# The MCU reads the battery through an external 8-bit ADC; the divider is
# sized so 15 V (the charger rail) is full scale.
ADC_FULL_SCALE_V = 15.0

# Charge current while the charging relay is closed.
CHARGE_CURRENT_A = 2.0

# Port-table extremes: 51 distinct bytes, each repeated 5 times.
_PPDATA_FIRST = 243
_PPDATA_LAST = 193


class ClockSkewError(RuntimeError):
    """control_step was invoked off its scheduled deadline (scheduler bug)."""


class ControllerMode(Enum):
    SPECIFIED = "SPECIFIED"
    LISTING = "LISTING"


@dataclass(frozen=True)
class Thresholds:
    """Control setpoints; defaults are the bench-calibrated values."""
    switch_ac_v: float = 180.0
    safe_battery_v: float = 6.0
    charge_start_v: float = 11.5
    charge_full_v: float = 13.5

    def __post_init__(self):
        if not self.safe_battery_v < self.charge_start_v < self.charge_full_v:
            raise ValueError("need safe < charge_start < charge_full")
        if self.switch_ac_v <= 0:
            raise ValueError("switch_ac_v must be > 0")


@dataclass(frozen=True)
class PpDataTable:
    """255-entry code-to-port-byte calibration table."""
    entries: bytes

    def __post_init__(self):
        if len(self.entries) != 255:
            raise ValueError("PPData must hold exactly 255 bytes")
        if any(a < b for a, b in zip(self.entries, self.entries[1:])):
            raise ValueError("PPData entries must be non-increasing")


def default_ppdata() -> PpDataTable:
    return PpDataTable(bytes(
        _PPDATA_FIRST - step
        for step in range(_PPDATA_FIRST - _PPDATA_LAST + 1)
        for _ in range(5)
    ))


@dataclass(frozen=True)
class RelayCommand:
    rla1_energized: bool   # charging relay; never powered during an outage
    rla2_energized: bool   # 2-pole source-transfer relay; energized = mains


@dataclass(frozen=True)
class McuState:
    """Firmware-visible state between timer interrupts."""
    ctr: int = CONTROL_CADENCE_TICKS
    adc_code: int = 255
    pp_byte: int = 255
    charger_active: bool = False
    mains_ok: bool = True          # listing init does `setb Mains`
    next_tick_us: int = TICK_PERIOD_US
    mode: ControllerMode = ControllerMode.SPECIFIED
    shutdown_latched: bool = field(default=False)


def mcu_reset(mode: ControllerMode = ControllerMode.SPECIFIED) -> McuState:
    """Power-on state: pass counter 8, ports at 255, charger off."""
    return McuState(mode=mode)


def tick_period_us() -> int:
    """Microseconds between Timer0 interrupts, from the reload bytes."""
    return TICK_PERIOD_US


def adc_sample(battery_v: float) -> int:
    """8-bit ADC code for a battery voltage (15 V full scale)."""
    if battery_v < 0:
        raise ValueError("battery_v must be >= 0")
    return min(255, max(0, round(battery_v / ADC_FULL_SCALE_V * 255.0)))


def lookup_ppdata(table: PpDataTable, code: int) -> int:
    """Table lookup; the 255-entry table clamps the top code."""
    return table.entries[min(code, 254)]


def charge_decision(battery_v: float, currently_charging: bool,
                    th: Thresholds) -> bool:
    """Hysteresis: start at/below charge_start_v, stop at/above charge_full_v."""
    if battery_v < 0:
        raise ValueError("battery_v must be >= 0")
    if battery_v <= th.charge_start_v:
        return True
    if battery_v >= th.charge_full_v:
        return False
    return currently_charging


def charge_decision_listing(code: int) -> bool:
    """Literal assembly semantics: only ADC code 10 stops the charger.

    The listing compares the code against #10 and falls through to the
    stop path only on equality; every other code jumps to the charge path
    before the #12 comparison is reachable.
    """
    return code != 10


def mains_sense(ac_rms: float, th: Thresholds) -> bool:
    """Comparator verdict: mains is usable strictly above the 180 V benchmark."""
    if ac_rms < 0:
        raise ValueError("ac_rms must be >= 0")
    return ac_rms > th.switch_ac_v


def relay_outputs(mains_ok: bool, charging: bool) -> RelayCommand:
    """Relay drive: transfer follows the comparator; the charging relay is
    additionally gated on mains (it cannot be powered during an outage)."""
    return RelayCommand(rla1_energized=mains_ok and charging,
                        rla2_energized=mains_ok)


def safe_battery_signal(battery_v: float, on_battery: bool, th: Thresholds) -> bool:
    """Combinational shutdown request: discharging at/below the safe floor.

    Latching across control passes is owned by control_step.
    """
    if battery_v < 0:
        raise ValueError("battery_v must be >= 0")
    return on_battery and battery_v <= th.safe_battery_v


def control_step(mcu: McuState, battery_v: float, ac_rms: float,
                 th: Thresholds, table: PpDataTable,
                 now_us: int) -> tuple[McuState, RelayCommand, int, bool]:
    """One Timer0 interrupt.

    Must be invoked exactly at ``mcu.next_tick_us``. Decrements the pass
    counter; every 8th tick runs the control pass in listing order (ADC ->
    table lookup -> charge decision -> port update) and refreshes the
    mains comparator and safe-battery latch from the inputs. Other ticks
    change nothing but the counter and the next deadline, so all returned
    outputs are held values.
    """
    if now_us != mcu.next_tick_us:
        raise ClockSkewError(
            f"tick at {now_us} us but scheduled for {mcu.next_tick_us} us")

    ctr = mcu.ctr - 1
    nxt = mcu.next_tick_us + TICK_PERIOD_US
    if ctr > 0:
        out = replace(mcu, ctr=ctr, next_tick_us=nxt)
        relays = relay_outputs(out.mains_ok, out.charger_active)
        return out, relays, out.pp_byte, out.shutdown_latched

    code = adc_sample(battery_v)
    if mcu.mode is ControllerMode.LISTING:
        code |= 1                      # listing forces ADCReg bit 0 before use
        charging = charge_decision_listing(code)
    else:
        charging = charge_decision(battery_v, mcu.charger_active, th)
    table_byte = lookup_ppdata(table, code)

    mains_ok = mains_sense(ac_rms, th)
    # On mains the port idles at 255; on battery it carries the table byte
    # with bit 0 cleared as the outage marker. The charger line is driven
    # separately and is not disturbed by the port write.
    pp_byte = 255 if mains_ok else table_byte & 0xFE

    if mains_ok:
        shutdown = False               # latch clears when mains is seen back
    else:
        shutdown = (mcu.shutdown_latched
                    or safe_battery_signal(battery_v, True, th))

    out = replace(mcu, ctr=CONTROL_CADENCE_TICKS, adc_code=code,
                  pp_byte=pp_byte, charger_active=charging,
                  mains_ok=mains_ok, next_tick_us=nxt,
                  shutdown_latched=shutdown)
    return out, relay_outputs(mains_ok, charging), pp_byte, shutdown
