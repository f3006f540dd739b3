"""Continuous electrical model of the UPS power path.

Covers mains, step-down transformer, bridge rectifier + filter, linear
regulators, battery, 555-oscillator inverter, protection fuse and the PC
load. AC quantities are modeled as an RMS envelope plus frequency; only
:func:`waveform_synthesize` produces sample-level waveforms (for plots and
the CLI's waveform CSV export).

All operations are pure functions over frozen value types; sequencing is
owned by the scenario event loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

# Nameplate constants of the modeled unit.
NOMINAL_MAINS_V = 220.0          # nominal grid RMS
NOMINAL_OUTPUT_V = 220.0         # inverter output at nominal battery volts
NOMINAL_BATTERY_V = 12.0
INVERTER_MAX_LOAD_W = 600.0      # step-up transformer winding limit
RATED_OUTPUT_VA = 650.0
PC_LOAD_W = 484.0                # sum of the reference PC part list


class PlantFault(Exception):
    """Base class for electrical-model errors."""


class OvercurrentError(PlantFault):
    """Regulator asked for more than its maximum output current."""


class OverloadError(PlantFault):
    """Inverter load exceeds the step-up transformer rating."""


class NonPositiveComponentError(ValueError):
    """Oscillator component value must be strictly positive."""


class BadSamplingError(ValueError):
    """Waveform synthesis needs at least 8 samples per cycle."""


@dataclass(frozen=True)
class AcSource:
    """RMS envelope of an AC supply; unavailable sources read as 0 V."""
    rms_volts: float
    frequency_hz: float = 50.0
    available: bool = True

    def __post_init__(self):
        if self.rms_volts < 0 or self.frequency_hz < 0:
            raise ValueError("AC source volts/frequency must be >= 0")

    @property
    def effective_rms(self) -> float:
        return self.rms_volts if self.available else 0.0


@dataclass(frozen=True)
class TransformerSpec:
    turns_ratio: float            # primary:secondary, step-down when > 1
    max_power_w: float

    def __post_init__(self):
        if self.turns_ratio <= 0 or self.max_power_w <= 0:
            raise ValueError("transformer ratio and power rating must be > 0")


@dataclass(frozen=True)
class RectifierFilterSpec:
    diode_drop_v: float           # per conducting diode (two in a bridge)
    cap_farads: float
    bleed_ohms: float

    def __post_init__(self):
        if self.diode_drop_v < 0:
            raise ValueError("diode drop must be >= 0")
        if self.cap_farads <= 0 or self.bleed_ohms <= 0:
            raise ValueError("filter cap and bleed resistor must be > 0")


@dataclass(frozen=True)
class RegulatorSpec:
    nominal_v: float
    dropout_v: float
    max_current_a: float

    def __post_init__(self):
        if min(self.nominal_v, self.dropout_v, self.max_current_a) <= 0:
            raise ValueError("regulator parameters must be > 0")


@dataclass(frozen=True)
class Battery:
    """Lead-acid battery with a linear terminal-voltage/charge map."""
    capacity_ah: float
    charge_ah: float
    nominal_v: float = 12.0
    v_full: float = 13.5
    v_empty: float = 6.0

    def __post_init__(self):
        if not 0.0 <= self.charge_ah <= self.capacity_ah:
            raise ValueError("charge_ah must lie in [0, capacity_ah]")
        if not self.v_empty < self.nominal_v < self.v_full:
            raise ValueError("battery endpoint voltages must bracket nominal")

    @property
    def soc(self) -> float:
        return self.charge_ah / self.capacity_ah


@dataclass(frozen=True)
class InverterSpec:
    """555 astable (r1/r2/c) + divide-by-two stage + step-up transformer."""
    r1_ohms: float = 4700.0
    r2_ohms: float = 4850.0       # pot setting that lands the astable on 100 Hz
    c_farads: float = 1e-6
    stepup_ratio: float = 20.0    # 12-0-12/240 winding
    efficiency: float = 0.8

    def __post_init__(self):
        if min(self.r1_ohms, self.r2_ohms, self.c_farads) <= 0:
            raise ValueError("oscillator components must be > 0")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")


@dataclass(frozen=True)
class Fuse:
    rating_a: float
    blown: bool = False

    def __post_init__(self):
        if self.rating_a <= 0:
            raise ValueError("fuse rating must be > 0")


@dataclass(frozen=True)
class LoadProfile:
    watts: float
    power_factor: float = 1.0

    def __post_init__(self):
        if self.watts < 0:
            raise ValueError("load watts must be >= 0")
        if not 0.0 < self.power_factor <= 1.0:
            raise ValueError("power factor must be in (0, 1]")


class LoadSource(Enum):
    MAINS = "MAINS"
    INVERTER = "INVERTER"
    NONE = "NONE"


@dataclass(frozen=True)
class PlantState:
    """Snapshot of the whole electrical state at one instant."""
    mains: AcSource
    battery: Battery
    fuse: Fuse
    rail_15v: float
    rail_5v: float
    load_v_rms: float
    load_source: LoadSource
    rla1_energized: bool
    rla2_energized: bool


def default_transformer() -> TransformerSpec:
    return TransformerSpec(turns_ratio=16.0, max_power_w=650.0)


def default_rectifier_filter() -> RectifierFilterSpec:
    # 1N4001 bridge, C1 smoothing cap, 300 ohm bleeder
    return RectifierFilterSpec(diode_drop_v=0.7, cap_farads=2220e-6, bleed_ohms=300.0)


REGULATOR_15V = RegulatorSpec(nominal_v=15.0, dropout_v=2.0, max_current_a=1.0)
REGULATOR_5V = RegulatorSpec(nominal_v=5.0, dropout_v=1.7, max_current_a=1.0)


def default_battery(charge_ah: float = 17.0) -> Battery:
    return Battery(capacity_ah=17.0, charge_ah=charge_ah)


def default_fuse() -> Fuse:
    return Fuse(rating_a=13.0)


def transformer_secondary(primary_rms: float, spec: TransformerSpec) -> float:
    """Secondary RMS of an ideal transformer: primary / turns ratio."""
    if primary_rms < 0:
        raise ValueError("primary RMS must be >= 0")
    return primary_rms / spec.turns_ratio


def rectify_filter(secondary_rms: float, load_current_a: float,
                   spec: RectifierFilterSpec, mains_freq_hz: float) -> tuple[float, float]:
    """Full-wave bridge + capacitor filter.

    Returns (dc_volts, ripple_pp_v): DC level is the secondary peak minus
    two diode drops; peak-to-peak ripple is I/(2·f·C) (full-wave halves the
    discharge interval), clamped so it never exceeds the DC level itself.
    """
    if secondary_rms < 0 or load_current_a < 0 or mains_freq_hz < 0:
        raise ValueError("rectifier inputs must be >= 0")
    if secondary_rms > 0 and mains_freq_hz <= 0:
        raise ValueError("mains frequency must be > 0 while the source is live")
    dc = max(0.0, secondary_rms * math.sqrt(2.0) - 2.0 * spec.diode_drop_v)
    if load_current_a > 0 and mains_freq_hz > 0:
        ripple = load_current_a / (2.0 * mains_freq_hz * spec.cap_farads)
    else:
        ripple = 0.0
    return dc, min(ripple, dc)


def regulate(input_dc: float, spec: RegulatorSpec, current_a: float = 0.0) -> float:
    """Linear regulator output for a given input rail and load current.

    Holds nominal with at least dropout_v of headroom; below that the
    output degrades continuously to input - dropout (floored at 0).
    """
    if input_dc < 0 or current_a < 0:
        raise ValueError("regulator inputs must be >= 0")
    if current_a > spec.max_current_a:
        raise OvercurrentError(
            f"{current_a:g} A exceeds the {spec.max_current_a:g} A regulator limit")
    if input_dc >= spec.nominal_v + spec.dropout_v:
        return spec.nominal_v
    return max(0.0, input_dc - spec.dropout_v)


def battery_step(b: Battery, current_a: float, dt_s: float) -> Battery:
    """Advance stored charge by a signed current (+charge/-discharge).

    Clamping to [0, capacity] is the overcharge/overdischarge guard.
    """
    if dt_s < 0:
        raise ValueError("dt_s must be >= 0")
    charge = b.charge_ah + current_a * dt_s / 3600.0
    return replace(b, charge_ah=min(max(charge, 0.0), b.capacity_ah))


def battery_voltage(b: Battery) -> float:
    """Terminal volts as a linear map of state of charge (v_empty..v_full)."""
    return b.v_empty + (b.v_full - b.v_empty) * (b.charge_ah / b.capacity_ah)


def oscillator_frequency(r1_ohms: float, r2_ohms: float, c_farads: float) -> float:
    """555 astable frequency: 1.44 / ((R1 + 2*R2) * C)."""
    if r1_ohms <= 0 or r2_ohms <= 0 or c_farads <= 0:
        raise NonPositiveComponentError("oscillator components must be > 0")
    return 1.44 / ((r1_ohms + 2.0 * r2_ohms) * c_farads)


def inverter_output(battery_v: float, spec: InverterSpec,
                    load_w: float) -> tuple[float, float, float]:
    """Inverter AC output and battery draw for a given DC input and load.

    The flip-flop halves the astable frequency (exactly). Output RMS scales
    with battery volts around the 220 V nominal point and is clamped to the
    winding ceiling; battery current balances load power at the configured
    efficiency.
    """
    if battery_v < 0 or load_w < 0:
        raise ValueError("inverter inputs must be >= 0")
    if load_w > INVERTER_MAX_LOAD_W:
        raise OverloadError(
            f"{load_w:g} W exceeds the {INVERTER_MAX_LOAD_W:g} W transformer rating")
    freq_hz = oscillator_frequency(spec.r1_ohms, spec.r2_ohms, spec.c_farads) / 2.0
    if battery_v == 0.0:
        return 0.0, freq_hz, 0.0
    ceiling = NOMINAL_BATTERY_V * spec.stepup_ratio
    ac_rms = min(max(NOMINAL_OUTPUT_V * (battery_v / NOMINAL_BATTERY_V), 0.0), ceiling)
    current_a = load_w / (spec.efficiency * battery_v)
    return ac_rms, freq_hz, current_a


def fuse_check(f: Fuse, current_a: float) -> Fuse:
    """Latching trip strictly above the rated current."""
    if current_a < 0:
        raise ValueError("fuse current must be >= 0")
    return replace(f, blown=f.blown or current_a > f.rating_a)


class WaveformKind(Enum):
    RAW_AC = "RAW_AC"
    UNFILTERED_DC = "UNFILTERED_DC"
    PARTIAL_FILTER = "PARTIAL_FILTER"
    FULL_FILTER = "FULL_FILTER"


# Default decay constant for the partially filtered view: bleed * C1.
DEFAULT_FILTER_RC_S = 300.0 * 2220e-6


def waveform_synthesize(kind: WaveformKind, amplitude_v: float, freq_hz: float,
                        duration_s: float, samples_per_cycle: int, *,
                        rc_seconds: float = DEFAULT_FILTER_RC_S,
                        ripple_pp_v: float = 0.0) -> list[tuple[float, float]]:
    """Sample one of the rectifier-chain waveforms as (t_s, volts) pairs.

    RAW_AC is the plain sine; UNFILTERED_DC its pointwise absolute value
    (bridge output); PARTIAL_FILTER rides the rectified humps and decays
    exponentially (RC) between peaks; FULL_FILTER is flat DC at the peak
    minus half the ripple.
    """
    if samples_per_cycle < 8:
        raise BadSamplingError("samples_per_cycle must be >= 8")
    if duration_s <= 0:
        raise ValueError("duration_s must be > 0")
    if freq_hz <= 0:
        raise ValueError("freq_hz must be > 0")
    if amplitude_v < 0:
        raise ValueError("amplitude_v must be >= 0")

    dt = 1.0 / (freq_hz * samples_per_cycle)
    n = max(1, round(duration_s * freq_hz * samples_per_cycle))
    samples: list[tuple[float, float]] = []

    if kind is WaveformKind.FULL_FILTER:
        level = max(0.0, amplitude_v - ripple_pp_v / 2.0)
        return [(k * dt, level) for k in range(n)]

    decay = math.exp(-dt / rc_seconds) if rc_seconds > 0 else 0.0
    held = 0.0
    for k in range(n):
        t = k * dt
        v = amplitude_v * math.sin(2.0 * math.pi * freq_hz * t)
        if kind is WaveformKind.RAW_AC:
            samples.append((t, v))
            continue
        rectified = abs(v)
        if kind is WaveformKind.UNFILTERED_DC:
            samples.append((t, rectified))
        else:  # PARTIAL_FILTER: peak detector discharging through the bleeder
            held = max(rectified, held * decay)
            samples.append((t, held))
    return samples
