"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from dramshift.array import DramGeometry, RowAddress, build_memory, host_read_row, host_write_row
from dramshift.cli import main
from dramshift.config import SimConfig
from dramshift.energy import aggregate_throughput, baseline_movement_energy
from dramshift.engine import (
    CommandKind, CommandTrace, EventKind, exec_shift_left, exec_shift_right, run_trace, shift_oracle,
)
from dramshift.experiments import shift_bench
from dramshift.kernels import KernelKind, compile_kernel, execute_kernel, gf256_mul_oracle, kernel_oracle
from dramshift.reliability import mim_plate_area, monte_carlo

RESULTS: list[str] = []
SHIFTS = {"right": exec_shift_right, "left": exec_shift_left}
TABLE2 = {1: 31.321, 50: 1592.52, 100: 3223.6, 512: 16554.6}
TABLE3 = {1: 208.7, 50: 10291.0, 100: 20733.0, 512: 106272.0}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def benches():
    return {n: shift_bench(SimConfig(), n) for n in TABLE2}


def _bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=bool)


def _int(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def test_criterion_01_shift_correctness():
    start = time.perf_counter()
    mismatches = 0
    src, dst = RowAddress(0, 0, 0), RowAddress(0, 0, 1)
    mem = build_memory(DramGeometry(1, 1, 1, 1, 4, 8))
    for v in range(256):
        host_write_row(mem, src, _bits(v, 8))
        for direction, expected in (("right", (v << 1) & 0xFF), ("left", v >> 1)):
            SHIFTS[direction](mem, src, dst)
            mismatches += _int(host_read_row(mem, dst)) != expected
    rng = np.random.default_rng(2025)
    mem = build_memory(DramGeometry(1, 1, 1, 1, 4, 65536))
    for _ in range(1000):
        bits = rng.integers(0, 2, 65536).astype(bool)
        host_write_row(mem, src, bits)
        for direction in ("right", "left"):
            SHIFTS[direction](mem, src, dst)
            mismatches += not np.array_equal(host_read_row(mem, dst), shift_oracle(bits, direction))
    elapsed = time.perf_counter() - start
    report(1, mismatches == 0 and elapsed < 60,
           f"shift oracle: {mismatches} mismatches over 2x256 + 2x1000 rows in {elapsed:.1f} s")


def test_criterion_02_aap_structure():
    trace = CommandTrace()
    for i in range(10_000):
        kind = CommandKind.SHIFT_RIGHT if i % 2 else CommandKind.SHIFT_LEFT
        trace.append(kind, RowAddress(0, 0, i % 2), RowAddress(0, 0, (i + 1) % 2))
    events = run_trace(trace, build_memory(DramGeometry(1, 1, 1, 1, 4, 64))).events
    per_shift = np.bincount([e.index for e in events if e.kind is EventKind.AAP], minlength=10_000)
    others = sum(e.kind is not EventKind.AAP for e in events)
    report(2, bool((per_shift == 4).all()) and others == 0,
           f"AAP per shift over 10,000 shifts: min {per_shift.min()} max {per_shift.max()}")


def test_criterion_03_table2(benches):
    parts, ok = [], True
    for n, target in TABLE2.items():
        total = benches[n][1].total
        tol = 0.005 if n == 1 else 0.03
        err = abs(total - target) / target
        ok &= err <= tol
        parts.append(f"{n}: {total:.3f} nJ ({err:+.2%})")
    report(3, ok, "energy vs 31.321/1592.52/3223.6/16554.6 nJ: " + ", ".join(parts))


def test_criterion_04_table3(benches):
    parts, ok = [], True
    for n, target in TABLE3.items():
        t = benches[n][2].total_time
        err = abs(t - target) / target
        ok &= (t == target) if n == 1 else err <= 0.02
        parts.append(f"{n}: {t:.1f} ns ({err:+.2%})")
    tps = [benches[n][2].throughput for n in TABLE3]
    ok &= all(abs(tp - 4.82) / 4.82 <= 0.02 for tp in tps)
    report(4, ok, "time " + ", ".join(parts) + "; throughput "
           + "/".join(f"{tp:.3f}" for tp in tps) + " MOps/s")


def test_criterion_05_energy_per_kb(benches):
    values = [benches[n][2].energy_per_kb for n in TABLE2]
    report(5, all(3.915 <= v <= 4.041 for v in values),
           "nJ/KB " + ", ".join(f"{v:.4f}" for v in values) + " in [3.915, 4.041]")


def test_criterion_06_bank_parallelism():
    a, b = aggregate_throughput(4.82, 8), aggregate_throughput(4.82, 32)
    report(6, a == 38.56 and b == 154.24, f"8 banks {a} MOps/s, 32 banks {b} MOps/s")


def test_criterion_07_baseline():
    low, high = baseline_movement_energy(8192)
    report(7, (low, high) == (1280.0, 1920.0), f"8 KB read-only movement ({low:g}, {high:g}) nJ")


def test_criterion_08_table4():
    start = time.perf_counter()
    levels = (0.0, 0.05, 0.10, 0.20)
    rates = [monte_carlo(lv, 100_000) for lv in levels]
    elapsed = time.perf_counter() - start
    ok = (rates[0] == 0.0 and 0.001 <= rates[1] <= 0.02 and 0.22 <= rates[3] <= 0.38
          and all(a < b for a, b in zip(rates, rates[1:])) and elapsed < 300)
    report(8, ok, "failure rates " + ", ".join(f"+-{lv:.0%}: {r:.3%}" for lv, r in zip(levels, rates))
           + f" in {elapsed:.1f} s")


def test_criterion_09_mim_area():
    area, side = mim_plate_area(25, 8, 20)
    ok = f"{area:.3g}" == "1.13e+06" and f"{side:.3g}" == "1.06e+03"
    report(9, ok, f"plate area {area:.4g} nm^2, side {side:.4g} nm")


def test_criterion_10_kernels():
    start = time.perf_counter()
    parts, total = [], 0
    for kind, width in ((KernelKind.GF256_MUL, 8), (KernelKind.MUL_SHIFT_ADD, 8),
                        (KernelKind.ADD_RIPPLE, 4)):
        a, b = np.divmod(np.arange(1 << (2 * width)), 1 << width)
        out = execute_kernel(compile_kernel(kind, width), {"a": a, "b": b}).outputs
        expected = np.array([kernel_oracle(kind, width, int(x), int(y)) for x, y in zip(a, b)])
        bad = int(np.count_nonzero(out != expected))
        total += bad
        parts.append(f"{kind.value}{width}: {bad}/{a.size}")
    elapsed = time.perf_counter() - start
    ok = total == 0 and elapsed < 600 and gf256_mul_oracle(0x57, 0x83) == 0xC1
    report(10, ok, "kernel mismatches " + ", ".join(parts) + f" in {elapsed:.1f} s")


def test_criterion_11_determinism(capsys):
    runs = (["shift-bench", "--shifts", "512", "--json"],
            ["reliability", "--trials", "100000", "--seed", "7"],
            ["kernel", "--kind", "gf256", "--a", "0x57", "--b", "0x83"],
            ["capacitor"])
    same = 0
    for argv in runs:
        outputs = []
        for _ in range(2):
            code = main(argv)
            outputs.append((code, capsys.readouterr().out.encode()))
        same += outputs[0] == outputs[1] and outputs[0][0] == 0
    report(11, same == len(runs), f"{same}/{len(runs)} report kinds byte-identical on re-run")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
