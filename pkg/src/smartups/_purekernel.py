"""Pure-Python battery integrators for the simulation hot loop.

One "stride" covers the gap between two event-loop boundaries, split into
plant-dt substeps: a possibly ragged first substep (when the stride starts
off the dt grid), ``n_full`` full substeps, and a possibly empty ragged
last substep. Charge is forward-Euler integrated per substep and clamped
to [0, capacity] after every substep, so overcharge/overdischarge guards
hold at plant-dt resolution.

smartups._core is the compiled twin of this module. The arithmetic here is
written expression-for-expression identical to the Cython version (and the
extension is built with FP contraction off) so both backends produce
bit-identical charge trajectories. Do not "simplify" one without the other.
"""


def step_const(q, cap, amps, dt_first_s, n_full, dt_full_s, dt_last_s):
    """Integrate a constant charge/discharge current over one stride."""
    q = q + amps * dt_first_s / 3600.0
    if q < 0.0:
        q = 0.0
    elif q > cap:
        q = cap
    dq = amps * dt_full_s / 3600.0
    for _ in range(n_full):
        q = q + dq
        if q < 0.0:
            q = 0.0
        elif q > cap:
            q = cap
    if dt_last_s > 0.0:
        q = q + amps * dt_last_s / 3600.0
        if q < 0.0:
            q = 0.0
        elif q > cap:
            q = cap
    return q


def step_discharge(q, cap, v_empty, v_span, load_w, eff,
                   dt_first_s, n_full, dt_full_s, dt_last_s):
    """Integrate an inverter discharge (current = load/(eff*V(q))) over one stride."""
    v = v_empty + v_span * (q / cap)
    if v > 0.0:
        q = q - (load_w / (eff * v)) * (dt_first_s / 3600.0)
        if q < 0.0:
            q = 0.0
        elif q > cap:
            q = cap
    for _ in range(n_full):
        v = v_empty + v_span * (q / cap)
        if v <= 0.0:
            break
        q = q - (load_w / (eff * v)) * (dt_full_s / 3600.0)
        if q < 0.0:
            q = 0.0
        elif q > cap:
            q = cap
    if dt_last_s > 0.0:
        v = v_empty + v_span * (q / cap)
        if v > 0.0:
            q = q - (load_w / (eff * v)) * (dt_last_s / 3600.0)
            if q < 0.0:
                q = 0.0
            elif q > cap:
                q = cap
    return q
