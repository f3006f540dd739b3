# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled battery integrators: the hot-loop twin of smartups._purekernel.

Keep the arithmetic expression-for-expression identical to _purekernel;
the build passes -ffp-contract=off so results are bit-identical to the
pure-Python kernels on any backend.
"""


def step_const(double q, double cap, double amps,
               double dt_first_s, long n_full, double dt_full_s,
               double dt_last_s):
    """Integrate a constant charge/discharge current over one stride."""
    cdef long i
    cdef double dq
    q = q + amps * dt_first_s / 3600.0
    if q < 0.0:
        q = 0.0
    elif q > cap:
        q = cap
    dq = amps * dt_full_s / 3600.0
    for i in range(n_full):
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


def step_discharge(double q, double cap, double v_empty, double v_span,
                   double load_w, double eff,
                   double dt_first_s, long n_full, double dt_full_s,
                   double dt_last_s):
    """Integrate an inverter discharge (current = load/(eff*V(q))) over one stride."""
    cdef long i
    cdef double v
    v = v_empty + v_span * (q / cap)
    if v > 0.0:
        q = q - (load_w / (eff * v)) * (dt_first_s / 3600.0)
        if q < 0.0:
            q = 0.0
        elif q > cap:
            q = cap
    for i in range(n_full):
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
