"""Firmware-emulation tests: timer cadence, ADC, port table, charge
hysteresis, listing-mode quirks, relay drive and the shutdown latch."""

import pytest
from hypothesis import given, strategies as st

from smartups.controller import (
    CONTROL_CADENCE_TICKS,
    TICK_PERIOD_US,
    TIMER0_RELOAD,
    ClockSkewError,
    ControllerMode,
    Thresholds,
    adc_sample,
    charge_decision,
    charge_decision_listing,
    control_step,
    default_ppdata,
    lookup_ppdata,
    mains_sense,
    mcu_reset,
    relay_outputs,
    safe_battery_signal,
    tick_period_us,
)

TH = Thresholds()
TABLE = default_ppdata()

# The port table exactly as the firmware carries it: 51 distinct bytes,
# 243 down to 193, each repeated five times.
LISTING_PPDATA = bytes([
    243, 243, 243, 243, 243,
    242, 242, 242, 242, 242,
    241, 241, 241, 241, 241,
    240, 240, 240, 240, 240,
    239, 239, 239, 239, 239,
    238, 238, 238, 238, 238,
    237, 237, 237, 237, 237,
    236, 236, 236, 236, 236,
    235, 235, 235, 235, 235,
    234, 234, 234, 234, 234,
    233, 233, 233, 233, 233,
    232, 232, 232, 232, 232,
    231, 231, 231, 231, 231,
    230, 230, 230, 230, 230,
    229, 229, 229, 229, 229,
    228, 228, 228, 228, 228,
    227, 227, 227, 227, 227,
    226, 226, 226, 226, 226,
    225, 225, 225, 225, 225,
    224, 224, 224, 224, 224,
    223, 223, 223, 223, 223,
    222, 222, 222, 222, 222,
    221, 221, 221, 221, 221,
    220, 220, 220, 220, 220,
    219, 219, 219, 219, 219,
    218, 218, 218, 218, 218,
    217, 217, 217, 217, 217,
    216, 216, 216, 216, 216,
    215, 215, 215, 215, 215,
    214, 214, 214, 214, 214,
    213, 213, 213, 213, 213,
    212, 212, 212, 212, 212,
    211, 211, 211, 211, 211,
    210, 210, 210, 210, 210,
    209, 209, 209, 209, 209,
    208, 208, 208, 208, 208,
    207, 207, 207, 207, 207,
    206, 206, 206, 206, 206,
    205, 205, 205, 205, 205,
    204, 204, 204, 204, 204,
    203, 203, 203, 203, 203,
    202, 202, 202, 202, 202,
    201, 201, 201, 201, 201,
    200, 200, 200, 200, 200,
    199, 199, 199, 199, 199,
    198, 198, 198, 198, 198,
    197, 197, 197, 197, 197,
    196, 196, 196, 196, 196,
    195, 195, 195, 195, 195,
    194, 194, 194, 194, 194,
    193, 193, 193, 193, 193,
])


# -- timer ----------------------------------------------------------------------

def test_timer0_reload_value():
    assert TIMER0_RELOAD == 3035


def test_tick_period_from_reload_bytes():
    assert tick_period_us() == 62501


def test_control_pass_cadence():
    assert CONTROL_CADENCE_TICKS * TICK_PERIOD_US == 500008


# -- reset ----------------------------------------------------------------------

def test_reset_state():
    mcu = mcu_reset()
    assert mcu.ctr == 8
    assert mcu.pp_byte == 255
    assert mcu.charger_active is False
    assert mcu.mains_ok is True
    assert mcu.next_tick_us == TICK_PERIOD_US
    assert mcu.shutdown_latched is False


# -- ADC -------------------------------------------------------------------------

@pytest.mark.parametrize("volts,code", [(15.0, 255), (0.0, 0), (12.0, 204)])
def test_adc_scaling(volts, code):
    assert adc_sample(volts) == code


def test_adc_clamps_above_full_scale():
    assert adc_sample(40.0) == 255


# -- port table ---------------------------------------------------------------------

def test_ppdata_matches_listing_byte_for_byte():
    assert TABLE.entries == LISTING_PPDATA


def test_ppdata_shape():
    assert len(TABLE.entries) == 255
    assert all(a >= b for a, b in zip(TABLE.entries, TABLE.entries[1:]))
    for block in range(51):
        row = TABLE.entries[block * 5:block * 5 + 5]
        assert len(set(row)) == 1


@pytest.mark.parametrize("code,byte", [(0, 243), (5, 242), (254, 193)])
def test_ppdata_lookup(code, byte):
    assert lookup_ppdata(TABLE, code) == byte


def test_ppdata_lookup_clamps_code_255():
    assert lookup_ppdata(TABLE, 255) == 193


# -- charge control ---------------------------------------------------------------------

def test_hysteresis_start():
    assert charge_decision(11.4, False, TH) is True


def test_hysteresis_stop():
    assert charge_decision(13.5, True, TH) is False


def test_hysteresis_holds_inside_band():
    assert charge_decision(12.5, True, TH) is True
    assert charge_decision(12.5, False, TH) is False


@given(st.floats(6.0, 14.0), st.floats(6.0, 14.0), st.integers(10, 80))
def test_hysteresis_no_chatter_on_monotone_sweeps(lo, hi, n):
    lo, hi = min(lo, hi), max(lo, hi)
    ramp = [lo + (hi - lo) * i / n for i in range(n + 1)]
    for sweep in (ramp, ramp[::-1]):
        state = charge_decision(sweep[0], False, TH)
        flips = 0
        for v in sweep[1:]:
            nxt = charge_decision(v, state, TH)
            flips += nxt != state
            state = nxt
        assert flips <= 1


def test_listing_charge_rule_exhaustive():
    for code in range(256):
        assert charge_decision_listing(code) is (code != 10)


# -- comparator & relays -------------------------------------------------------------------

@pytest.mark.parametrize("volts,ok", [(220.0, True), (180.0, False), (181.0, True),
                                      (150.0, False), (0.0, False)])
def test_mains_sense(volts, ok):
    assert mains_sense(volts, TH) is ok


def test_relay_truth_table():
    assert relay_outputs(True, True) == relay_outputs(True, True)
    assert relay_outputs(True, True).rla1_energized
    assert relay_outputs(True, True).rla2_energized
    assert not relay_outputs(False, True).rla1_energized
    assert not relay_outputs(False, True).rla2_energized
    assert relay_outputs(True, False).rla2_energized
    assert not relay_outputs(True, False).rla1_energized


def test_relay_guard_exhaustive():
    for mains_ok in (False, True):
        for charging in (False, True):
            cmd = relay_outputs(mains_ok, charging)
            assert not (cmd.rla1_energized and not mains_ok)


# -- safe-battery signal ---------------------------------------------------------------------

def test_safe_battery_asserts_on_battery_at_floor():
    assert safe_battery_signal(6.0, True, TH) is True


def test_safe_battery_ignores_mains_operation():
    assert safe_battery_signal(6.0, False, TH) is False


def test_safe_battery_quiet_when_healthy():
    assert safe_battery_signal(12.0, True, TH) is False


# -- control_step --------------------------------------------------------------------------------

def _tick(mcu, battery_v, ac_rms, mode_table=TABLE):
    return control_step(mcu, battery_v, ac_rms, TH, mode_table,
                        now_us=mcu.next_tick_us)


def test_seven_ticks_do_no_control_work():
    mcu = mcu_reset()
    for expected_ctr in (7, 6, 5, 4, 3, 2, 1):
        mcu, relays, pp, shutdown = _tick(mcu, 12.0, 0.0)
        assert mcu.ctr == expected_ctr
        # held outputs: still the power-on values, even though mains is dead
        assert mcu.adc_code == 255
        assert pp == 255
        assert mcu.mains_ok is True
        assert shutdown is False


def test_eighth_tick_on_mains_idles_port_at_255():
    mcu = mcu_reset()
    for _ in range(8):
        mcu, relays, pp, shutdown = _tick(mcu, 13.0, 220.0)
    assert mcu.ctr == 8
    assert pp == 255
    assert relays.rla2_energized
    assert shutdown is False


def test_eighth_tick_on_battery_emits_masked_table_byte():
    mcu = mcu_reset()
    for _ in range(8):
        mcu, relays, pp, shutdown = _tick(mcu, 12.0, 0.0)
    assert mcu.adc_code == 204
    assert pp == 202                    # table[204]=203, bit 0 cleared
    assert not relays.rla2_energized


def test_listing_mode_forces_adc_bit0():
    mcu = mcu_reset(ControllerMode.LISTING)
    for _ in range(8):
        mcu, _, pp, _ = _tick(mcu, 12.0, 0.0)
    assert mcu.adc_code == 205          # 204 | 1
    assert pp == 202                    # table[205]=202, bit0 already clear


def test_listing_mode_never_stops_charging():
    # the forced bit 0 makes code 10 unreachable, so the charger stays on
    mcu = mcu_reset(ControllerMode.LISTING)
    for _ in range(64):
        mcu, _, _, _ = _tick(mcu, 13.5, 220.0)
    assert mcu.charger_active is True


def test_clock_skew_is_fatal():
    mcu = mcu_reset()
    with pytest.raises(ClockSkewError):
        control_step(mcu, 12.0, 220.0, TH, TABLE, now_us=mcu.next_tick_us + 1)


def test_shutdown_latch_holds_until_mains_returns():
    mcu = mcu_reset()
    # drain to the floor while on battery
    for _ in range(8):
        mcu, _, _, shutdown = _tick(mcu, 6.0, 0.0)
    assert shutdown is True
    # battery voltage rebounds off-load: latch must hold
    for _ in range(8):
        mcu, _, _, shutdown = _tick(mcu, 7.5, 0.0)
    assert shutdown is True
    # mains restored: the next control pass clears the latch
    for _ in range(8):
        mcu, _, _, shutdown = _tick(mcu, 7.5, 220.0)
    assert shutdown is False


def test_cadence_only_ctr_and_deadline_change_between_passes():
    mcu = mcu_reset()
    for _ in range(8):        # land on a fresh pass boundary
        mcu, _, _, _ = _tick(mcu, 12.0, 220.0)
    ref = mcu
    for _ in range(7):
        mcu, _, _, _ = _tick(mcu, 9.0, 100.0)   # wildly different inputs
        assert mcu.adc_code == ref.adc_code
        assert mcu.pp_byte == ref.pp_byte
        assert mcu.charger_active == ref.charger_active
        assert mcu.mains_ok == ref.mains_ok
        assert mcu.shutdown_latched == ref.shutdown_latched
