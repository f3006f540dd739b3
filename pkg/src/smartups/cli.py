"""Command-line front end.

Subcommands:

* ``run``      - execute a scenario script and write the trace CSV
* ``waveform`` - export a rectifier-chain waveform as CSV
* ``serve``    - live simulation behind the TCP gateway

Exit codes: 0 success, 1 usage error, 2 scenario error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time

from smartups import __version__
from smartups.controller import ControllerMode
from smartups.gateway import DEFAULT_PORT, GatewayServer
from smartups.plant import (
    BadSamplingError,
    DEFAULT_FILTER_RC_S,
    WaveformKind,
    default_battery,
    waveform_synthesize,
)
from smartups.scenario import ScenarioError, SimConfig, parse_scenario, run, write_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_IO = 3

_WAVEFORM_KINDS = {
    "raw": WaveformKind.RAW_AC,
    "unfiltered": WaveformKind.UNFILTERED_DC,
    "partial": WaveformKind.PARTIAL_FILTER,
    "full": WaveformKind.FULL_FILTER,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="smartups",
                description="Smart embedded PC UPS simulator")
    p.add_argument("--version", action="version", version=f"smartups {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    runp = sub.add_parser("run", help="run a scenario script to a trace CSV")
    runp.add_argument("--scenario", required=True, help="scenario script path")
    runp.add_argument("--trace", required=True, help="output trace CSV path")
    runp.add_argument("--mode", choices=("specified", "listing"),
                      default="specified", help="controller firmware mode")
    runp.add_argument("--dt-ms", type=float, default=1.0,
                      help="plant integration step (default 1 ms)")
    runp.add_argument("--trace-every-ms", type=float, default=100.0,
                      help="periodic trace row interval (default 100 ms)")
    runp.add_argument("--battery-v", type=float, default=None,
                      help="initial battery terminal volts (default: full, 13.5)")

    wavep = sub.add_parser("waveform", help="export a waveform CSV")
    wavep.add_argument("--kind", required=True, choices=sorted(_WAVEFORM_KINDS),
                       help="which rectifier-chain view to synthesize")
    wavep.add_argument("--out", required=True, help="output CSV path")
    wavep.add_argument("--amplitude-v", type=float, default=21.2132034356,
                       help="peak volts (default: 15 Vrms secondary peak)")
    wavep.add_argument("--freq-hz", type=float, default=50.0)
    wavep.add_argument("--duration-s", type=float, default=0.1)
    wavep.add_argument("--samples-per-cycle", type=int, default=64)
    wavep.add_argument("--rc-s", type=float, default=DEFAULT_FILTER_RC_S,
                       help="partial-filter decay constant (bleed x cap)")
    wavep.add_argument("--ripple-pp-v", type=float, default=0.0,
                       help="full-filter peak-to-peak ripple")

    servep = sub.add_parser("serve", help="live simulation over TCP")
    servep.add_argument("--port", type=int, default=DEFAULT_PORT)
    servep.add_argument("--host", default="127.0.0.1")
    servep.add_argument("--speed", choices=("realtime", "fast"), default="realtime")
    servep.add_argument("--mode", choices=("specified", "listing"),
                        default="specified")
    servep.add_argument("--dt-ms", type=float, default=1.0)
    servep.add_argument("--interval-ms", type=float, default=100.0,
                        help="snapshot interval in simulated ms (>= 50)")
    servep.add_argument("--battery-v", type=float, default=None,
                        help="initial battery terminal volts")
    return p


def _sim_config(args) -> SimConfig:
    cfg = SimConfig(
        plant_dt_ms=args.dt_ms,
        trace_every_ms=getattr(args, "trace_every_ms", 100.0),
        controller_mode=(ControllerMode.LISTING if args.mode == "listing"
                         else ControllerMode.SPECIFIED),
    )
    if args.battery_v is not None:
        b = default_battery()
        if not b.v_empty <= args.battery_v <= b.v_full:
            raise ScenarioError(
                f"--battery-v must lie in [{b.v_empty}, {b.v_full}]")
        charge = (args.battery_v - b.v_empty) / (b.v_full - b.v_empty) * b.capacity_ah
        cfg.battery = default_battery(charge_ah=charge)
    return cfg


def _cmd_run(args) -> int:
    try:
        text = open(args.scenario, "r", encoding="utf-8").read()
    except OSError as exc:
        print(f"smartups: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        events = parse_scenario(text)
        cfg = _sim_config(args)
        records = run(events, cfg)
    except (ScenarioError, ValueError) as exc:
        print(f"smartups: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        nbytes = write_trace(records, args.trace)
    except OSError as exc:
        print(f"smartups: cannot write trace: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(records)} rows ({nbytes} bytes) to {args.trace}")
    return EXIT_OK


def _cmd_waveform(args) -> int:
    try:
        samples = waveform_synthesize(
            _WAVEFORM_KINDS[args.kind], args.amplitude_v, args.freq_hz,
            args.duration_s, args.samples_per_cycle,
            rc_seconds=args.rc_s, ripple_pp_v=args.ripple_pp_v)
    except (BadSamplingError, ValueError) as exc:
        print(f"smartups: {exc}", file=sys.stderr)
        return EXIT_USAGE
    lines = ["t_s,volts"]
    lines += [f"{t:.9g},{v:.9g}" for t, v in samples]
    try:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        print(f"smartups: cannot write waveform: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        cfg = _sim_config(args)
        server = GatewayServer(cfg, host=args.host, port=args.port,
                               speed=args.speed,
                               snapshot_interval_ms=args.interval_ms)
    except (ScenarioError, ValueError) as exc:
        print(f"smartups: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        server.start()
    except OSError as exc:
        print(f"smartups: cannot bind {args.host}:{args.port}: {exc}",
              file=sys.stderr)
        return EXIT_IO
    print(f"serving on {server.host}:{server.port} "
          f"(speed={server.speed}, mode={cfg.controller_mode.value})")
    try:
        while not server.sim.finished:
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return EXIT_OK


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --version/--help exit 0; argparse errors already mapped to 1
        return int(exc.code or 0)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "waveform":
        return _cmd_waveform(args)
    return _cmd_serve(args)


def entry() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    entry()
