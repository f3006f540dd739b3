#!/usr/bin/env python3
"""Benchmark: compiled battery kernels vs the pure-Python fallback.

Times the raw integrator on a long discharge stride, then the full
scenario engine on the 16-minute full-discharge run (the heaviest
acceptance scenario), once per backend.

Usage: python benchmarks/bench_kernels.py
"""

import time

from smartups import _purekernel

try:
    from smartups import _core
except ImportError:
    _core = None

N_SUBSTEPS = 1_000_000
DISCHARGE_ARGS = (17.0, 17.0, 6.0, 7.5, 484.0, 0.8, 1e-3, N_SUBSTEPS - 2, 1e-3, 1e-3)
SCRIPT = "at 0 mains 0\nend 1100000"


def time_kernel(kern, label):
    t0 = time.perf_counter()
    q = kern.step_discharge(*DISCHARGE_ARGS)
    dt = time.perf_counter() - t0
    rate = N_SUBSTEPS / dt / 1e6
    print(f"  {label:9s} {dt * 1e3:9.1f} ms   {rate:7.1f} M substeps/s   q_end={q:.6f}")
    return dt


def time_engine(backend_kern, label):
    from smartups import scenario
    from smartups.scenario import parse_scenario, run

    saved = (scenario.K.step_const, scenario.K.step_discharge)
    scenario.K.step_const = backend_kern.step_const
    scenario.K.step_discharge = backend_kern.step_discharge
    try:
        events = parse_scenario(SCRIPT)
        t0 = time.perf_counter()
        rows = run(events)
        dt = time.perf_counter() - t0
    finally:
        scenario.K.step_const, scenario.K.step_discharge = saved
    print(f"  {label:9s} {dt * 1e3:9.1f} ms   ({len(rows)} trace rows)")
    return dt


def main():
    print(f"raw integrator, {N_SUBSTEPS:,} x 1 ms discharge substeps:")
    t_pure = time_kernel(_purekernel, "pure")
    if _core is not None:
        t_comp = time_kernel(_core, "compiled")
        print(f"  speedup   {t_pure / t_comp:9.1f}x")
    else:
        print("  compiled core not built")

    print(f"\nfull engine, 16.4-minute discharge scenario at 1 ms dt:")
    t_pure = time_engine(_purekernel, "pure")
    if _core is not None:
        t_comp = time_engine(_core, "compiled")
        print(f"  speedup   {t_pure / t_comp:9.1f}x")


if __name__ == "__main__":
    main()
