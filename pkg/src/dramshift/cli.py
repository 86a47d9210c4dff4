"""Command-line entry point.

Exit status: 0 success, 2 configuration error, 3 trace or protocol error,
4 self-test failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .array import DramGeometry, RowAddress, bits_from_str, bits_to_str, build_memory, host_read_row, host_write_row
from .config import SimConfig, load_config, with_overrides
from .energy import aggregate_throughput, baseline_movement_energy
from .engine import exec_shift_left, exec_shift_right, shift_oracle
from .errors import AddressError, ConfigError, ProtocolError, TraceError, TraceParseError
from .experiments import capacitor, kernel_run, reliability_csv, reliability_sweep, run_trace_file, shift_bench
from .kernels import KernelKind, compile_kernel, execute_kernel, gf256_mul_oracle
from .reliability import mim_plate_area, monte_carlo

EXIT_CONFIG = 2
EXIT_TRACE = 3
EXIT_SELFTEST = 4


def _int_auto(text: str) -> int:
    return int(text, 0)


def _levels(text: str) -> list[float]:
    out = []
    for part in text.replace(" ", "").split(","):
        if part:
            out.append(float(part.rstrip("%")) / (100 if part.endswith("%") else 1))
    return out


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration key (repeatable)")
    p.add_argument("--out", help="directory for report files (default: stdout only)")
    p.add_argument("--json", action="store_true", help="print the JSON document instead of text")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="dramshift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="execute a command-trace file")
    p.add_argument("trace")

    p = sub.add_parser("shift-bench", parents=[common], help="shift benchmark in bank 0")
    p.add_argument("--shifts", type=int, required=True)
    p.add_argument("--direction", choices=("right", "left"), default="right")
    p.add_argument("--refresh-mode", choices=("energy_only", "blocking"))

    p = sub.add_parser("reliability", parents=[common], help="Monte-Carlo process variation sweep")
    p.add_argument("--levels", type=_levels, default=[0.0, 0.05, 0.10, 0.20],
                   help="comma separated fractions or percentages, e.g. 0,0.05 or 0%%,5%%")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--node")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("kernel", parents=[common], help="compile and run an arithmetic kernel")
    p.add_argument("--kind", choices=[k.value for k in KernelKind], required=True)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--a", type=_int_auto, required=True, help="operand (hex with 0x, or decimal)")
    p.add_argument("--b", type=_int_auto, required=True)
    p.add_argument("--dump-trace", help="write the compiled command trace here")

    p = sub.add_parser("capacitor", parents=[common], help="MIM capacitor plate geometry")
    p.add_argument("--c", type=float, default=25.0, help="capacitance, fF")
    p.add_argument("--d", type=float, default=8.0, help="dielectric thickness, nm")
    p.add_argument("--epsr", type=float, default=20.0, help="relative permittivity")

    p = sub.add_parser("selftest", parents=[common], help="fast acceptance checks")
    p.add_argument("--trials", type=int, default=100_000)
    return parser


def _config(args) -> SimConfig:
    config = load_config(args.config)
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for flag, key in (("refresh_mode", "refresh_mode"), ("node", "node"), ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return with_overrides(config, overrides) if overrides else config


def _emit(args, report, stem: str) -> None:
    if args.out:
        report.write(args.out, stem)
    sys.stdout.write(report.to_json() if args.json else report.to_text())


def _selftest(config: SimConfig, trials: int) -> bool:
    results = []

    def check(name, ok):
        results.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    mem = build_memory(DramGeometry(1, 1, 1, 1, 4, 8))
    src, dst = RowAddress(0, 0, 0), RowAddress(0, 0, 1)
    ok = True
    for v in range(256):
        bits = np.array([(v >> i) & 1 for i in range(8)], dtype=bool)
        host_write_row(mem, src, bits)
        exec_shift_right(mem, src, dst)
        ok &= bool((host_read_row(mem, dst) == shift_oracle(bits, "right")).all())
        exec_shift_left(mem, src, dst)
        ok &= bool((host_read_row(mem, dst) == shift_oracle(bits, "left")).all())
    check("shift oracle, 8 columns exhaustive", ok)

    host_write_row(mem, src, bits_from_str("10110100"))
    exec_shift_right(mem, src, dst)
    check("SHR 10110100 -> 01011010", bits_to_str(host_read_row(mem, dst)) == "01011010")

    targets = {1: (31.321, 208.7), 50: (1592.52, 10291.0), 100: (3223.6, 20733.0),
               512: (16554.6, 106272.0)}
    for n, (energy, time_ns) in targets.items():
        _, ledger, stats = shift_bench(config, n)
        tol_e = 0.005 if n == 1 else 0.03
        check(f"shift_bench {n}: energy {ledger.total:.3f} nJ vs {energy}",
              abs(ledger.total - energy) <= tol_e * energy)
        tol_t = 1e-9 if n == 1 else 0.02
        check(f"shift_bench {n}: time {stats.total_time:.1f} ns vs {time_ns}",
              abs(stats.total_time - time_ns) <= tol_t * time_ns)
        check(f"shift_bench {n}: {stats.energy_per_kb:.4f} nJ/KB in [3.915, 4.041]",
              3.915 <= stats.energy_per_kb <= 4.041)
    check("8 banks -> 38.56 MOps/s", aggregate_throughput(4.82, 8) == 38.56)
    check("32 banks -> 154.24 MOps/s", aggregate_throughput(4.82, 32) == 154.24)
    check("8 KB read -> (1280, 1920) nJ", baseline_movement_energy(8192) == (1280.0, 1920.0))
    area, side = mim_plate_area(25, 8, 20)
    check(f"MIM plate {area:.4g} nm^2, side {side:.4g} nm",
          f"{area:.4g}" == "1.129e+06" and round(side) == 1063)

    rates = [monte_carlo(lv, trials, base_seed=config.seed) for lv in (0.0, 0.05, 0.10, 0.20)]
    check(f"Monte-Carlo rates {rates}",
          rates[0] == 0.0 and 0.001 <= rates[1] <= 0.02 and 0.13 <= rates[2] <= 0.15
          and 0.22 <= rates[3] <= 0.38 and rates == sorted(set(rates)))

    program = compile_kernel("gf256", 8)
    check("GF(2^8) 0x57 * 0x83 = 0xc1",
          int(execute_kernel(program, {"a": 0x57, "b": 0x83}).outputs[0]) == gf256_mul_oracle(0x57, 0x83) == 0xC1)
    return all(results)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args)
        if args.command == "run":
            report, _ = run_trace_file(config, args.trace)
            _emit(args, report, Path(args.trace).stem)
        elif args.command == "shift-bench":
            report, _, _ = shift_bench(config, args.shifts, args.direction)
            _emit(args, report, f"shift_bench_{args.shifts}")
        elif args.command == "reliability":
            report, rows = reliability_sweep(config, args.levels, args.trials)
            text = reliability_csv(rows)
            if args.out:
                report.write(args.out, "reliability")
                (Path(args.out) / "reliability.csv").write_text(text)
            sys.stdout.write(report.to_json() if args.json else text)
        elif args.command == "kernel":
            report = kernel_run(config, args.kind, args.width, args.a, args.b, args.dump_trace)
            _emit(args, report, f"kernel_{args.kind}{args.width}")
        elif args.command == "capacitor":
            _emit(args, capacitor(args.c, args.d, args.epsr), "capacitor")
        elif args.command == "selftest":
            return 0 if _selftest(config, args.trials) else EXIT_SELFTEST
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceParseError, TraceError, AddressError, ProtocolError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
