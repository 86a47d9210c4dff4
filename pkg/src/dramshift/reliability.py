"""Charge-sharing sense-margin model of the shift and its Monte-Carlo study.

A trial perturbs five device parameters once, then evaluates the four sensing
events of one shift: two source-row senses (captures into the migration rows)
and two migration-row releases. Writes driven by the sense amplifiers are
full swing and assumed margin-free. A trial fails when any event's margin is
below the sense threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.constants import epsilon_0

from .errors import ParameterError

VARIED = ("c_cell", "access_l", "access_w", "bl_c_per_cell", "bl_r_per_cell")

# Sense-amp input capacitance at 22nm; other nodes scale with SA NMOS width.
C_SA_INPUT_22NM = 20.0  # fF
SA_NMOS_W_22NM = 7.0    # um

# A migration cell ties the storage nodes of two standard cells together.
MIGRATION_CAP_FACTOR = 2.0

# Fraction of the nominal margin below which sensing fails. Fit once with
# calibrate_threshold(node("22nm")) so that +-10% variation fails 14% of
# 100,000 trials (base seed 1), then frozen.
DEFAULT_THRESHOLD_RATIO = 0.960274

DEFAULT_BASE_SEED = 1
TRUNCATE_SIGMA = 3.0
STEP_NAMES = ("capture-top", "capture-bottom", "release-top", "release-bottom")


@dataclass(frozen=True)
class TechNodeParams:
    node_name: str
    vdd: float           # V
    wl_boost: float      # V
    c_cell: float        # fF
    access_l: float      # um
    access_w: float      # um
    sa_nmos_w: float     # um
    bl_r_per_cell: float  # mOhm
    bl_c_per_cell: float  # fF
    trise: float         # ns

    def __post_init__(self):
        for f in fields(self):
            if f.name != "node_name" and not getattr(self, f.name) > 0:
                raise ParameterError(f"{f.name} must be positive, got {getattr(self, f.name)}")


@lru_cache(maxsize=1)
def tech_nodes() -> dict[str, TechNodeParams]:
    """Presets shipped in data/tech_nodes.csv, keyed by node name."""
    text = resources.files("dramshift").joinpath("data/tech_nodes.csv").read_text()
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    out = {}
    for row in rows:
        name = row.pop("node_name")
        out[name] = TechNodeParams(name, **{k: float(v) for k, v in row.items()})
    return out


def node(name: str) -> TechNodeParams:
    try:
        return tech_nodes()[name]
    except KeyError:
        raise ParameterError(f"unknown technology node {name!r}; "
                             f"known: {sorted(tech_nodes())}") from None


@dataclass(frozen=True)
class MarginModel:
    rows_per_subarray: int = 512
    c_sa_input: float | None = None        # fF; None -> scaled from the node
    sense_threshold: float | None = None   # mV; None -> ratio of nominal margin
    threshold_ratio: float = DEFAULT_THRESHOLD_RATIO

    def sa_input(self, params: TechNodeParams) -> float:
        if self.c_sa_input is not None:
            return self.c_sa_input
        return C_SA_INPUT_22NM * params.sa_nmos_w / SA_NMOS_W_22NM

    def c_bitline(self, params: TechNodeParams, nominal: TechNodeParams | None = None) -> float:
        # SA input capacitance is a property of the amplifier, not of the varied bitline
        return self.rows_per_subarray * params.bl_c_per_cell + self.sa_input(nominal or params)

    def threshold(self, nominal: TechNodeParams) -> float:
        if self.sense_threshold is not None:
            return self.sense_threshold
        return self.threshold_ratio * sense_margin(nominal.vdd, nominal, self)


@dataclass(frozen=True)
class VariationTrial:
    seed: object
    level: float
    params: TechNodeParams
    margins: tuple[float, float, float, float]  # mV per step
    threshold: float
    passed: bool
    failing_step: int | None  # 1..4


def _derating(r_bl_ohm, c_bl_ff, trise_ns):
    tau = r_bl_ohm * c_bl_ff * 1e-6  # ohm * fF -> ns
    return 1.0 / (1.0 + tau / trise_ns)


def _margin_mv(vdd, c_cell, c_bl, r_bl_ohm, trise, cell_voltage, derate=True):
    v_pre = vdd / 2.0
    shared = (c_bl * v_pre + c_cell * cell_voltage) / (c_bl + c_cell)
    margin = np.abs(shared - v_pre) * 1e3
    if derate:
        margin = margin * _derating(r_bl_ohm, c_bl, trise)
    return margin


def sense_margin(cell_voltage: float, params, model: MarginModel | None = None, *,
                 cell_cap: float | None = None, nominal: TechNodeParams | None = None,
                 derate: bool = True) -> float:
    """Bitline deviation from precharge (mV) after sharing with one cell.

    ``params`` is a TechNodeParams or a VariationTrial (its perturbed copy is
    used). ``cell_cap`` overrides the storage capacitance, e.g. for a
    migration cell.
    """
    model = model or MarginModel()
    if isinstance(params, VariationTrial):
        params = params.params
    c_cell = params.c_cell if cell_cap is None else cell_cap
    c_bl = model.c_bitline(params, nominal)
    if c_cell < 0 or c_bl <= 0:
        raise ParameterError(f"non-positive capacitance: cell={c_cell} fF bitline={c_bl} fF")
    r_bl = model.rows_per_subarray * params.bl_r_per_cell * 1e-3
    return float(_margin_mv(params.vdd, c_cell, c_bl, r_bl, params.trise, cell_voltage, derate))


def _truncated_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal(n)
    bad = np.abs(z) > TRUNCATE_SIGMA
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > TRUNCATE_SIGMA
    return z


def _trial_draws(seed) -> np.ndarray:
    return _truncated_normals(np.random.default_rng(seed), len(VARIED))


@lru_cache(maxsize=4)
def _block_draws(base_seed: int, trials: int) -> np.ndarray:
    # trial i is seeded with (base_seed, i) so any subset can be replayed alone
    draws = np.stack([_trial_draws([base_seed, i]) for i in range(trials)])
    draws.setflags(write=False)
    return draws


def _check_level(level: float) -> None:
    if not 0.0 <= level <= 0.5:
        raise ValueError(f"variation level must be in [0, 0.5], got {level}")


def _step_margins(nominal: TechNodeParams, deltas: np.ndarray, model: MarginModel) -> np.ndarray:
    """Margins (mV) of the four shift steps; deltas has shape (n, len(VARIED))."""
    scale = 1.0 + deltas
    c_cell = nominal.c_cell * scale[:, 0]
    bl_c = nominal.bl_c_per_cell * scale[:, 3]
    bl_r = nominal.bl_r_per_cell * scale[:, 4]
    c_bl = model.rows_per_subarray * bl_c + model.sa_input(nominal)
    r_bl = model.rows_per_subarray * bl_r * 1e-3
    capture = _margin_mv(nominal.vdd, c_cell, c_bl, r_bl, nominal.trise, nominal.vdd)
    release = _margin_mv(nominal.vdd, MIGRATION_CAP_FACTOR * c_cell, c_bl, r_bl,
                         nominal.trise, nominal.vdd)
    return np.stack([capture, capture, release, release], axis=1)


def _perturbed(nominal: TechNodeParams, deltas: np.ndarray) -> TechNodeParams:
    return replace(nominal, **{name: getattr(nominal, name) * (1.0 + float(d))
                               for name, d in zip(VARIED, deltas)})


def simulate_shift_trial(level: float, seed, node_params: TechNodeParams | None = None,
                         model: MarginModel | None = None) -> VariationTrial:
    """One Monte-Carlo sample: each varied parameter is drawn from a normal with
    3 sigma = level * nominal, truncated at +-level."""
    _check_level(level)
    nominal = node_params or node("22nm")
    model = model or MarginModel()
    deltas = _trial_draws(seed) * level / TRUNCATE_SIGMA
    margins = _step_margins(nominal, deltas[None, :], model)[0]
    thr = model.threshold(nominal)
    failing = np.flatnonzero(margins < thr)
    return VariationTrial(
        seed=seed, level=level, params=_perturbed(nominal, deltas),
        margins=tuple(float(m) for m in margins), threshold=thr,
        passed=failing.size == 0,
        failing_step=int(failing[0]) + 1 if failing.size else None,
    )


def min_margins(level: float, trials: int, node_params: TechNodeParams | None = None,
                base_seed: int = DEFAULT_BASE_SEED, model: MarginModel | None = None) -> np.ndarray:
    """Worst step margin (mV) of every trial; trial i uses seed (base_seed, i)."""
    _check_level(level)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nominal = node_params or node("22nm")
    model = model or MarginModel()
    deltas = _block_draws(base_seed, trials) * level / TRUNCATE_SIGMA
    return _step_margins(nominal, deltas, model).min(axis=1)


def monte_carlo_failures(level: float, trials: int, node_params: TechNodeParams | None = None,
                         base_seed: int = DEFAULT_BASE_SEED,
                         model: MarginModel | None = None) -> int:
    nominal = node_params or node("22nm")
    model = model or MarginModel()
    worst = min_margins(level, trials, nominal, base_seed, model)
    return int(np.count_nonzero(worst < model.threshold(nominal)))


def monte_carlo(level: float, trials: int, node_params: TechNodeParams | None = None,
                base_seed: int = DEFAULT_BASE_SEED, model: MarginModel | None = None) -> float:
    """Failure rate of the shift at a +-level process variation."""
    return monte_carlo_failures(level, trials, node_params, base_seed, model) / trials


def calibrate_threshold(node_params: TechNodeParams | None = None, level: float = 0.10,
                        target: float = 0.14, trials: int = 100_000,
                        base_seed: int = DEFAULT_BASE_SEED,
                        model: MarginModel | None = None) -> float:
    """Threshold ratio (of nominal margin) giving exactly ``target`` failures."""
    nominal = node_params or node("22nm")
    model = model or MarginModel()
    worst = np.sort(min_margins(level, trials, nominal, base_seed, model))
    k = round(target * trials)
    if not 0 < k < trials:
        raise ValueError("target must leave at least one passing and one failing trial")
    thr = 0.5 * (worst[k - 1] + worst[k])
    return thr / sense_margin(nominal.vdd, nominal, model)


def mim_plate_area(c_ff: float, thickness_nm: float, eps_r: float) -> tuple[float, float]:
    """Plate area (nm^2) and square side (nm) of a parallel-plate MIM capacitor."""
    if min(c_ff, thickness_nm, eps_r) <= 0:
        raise ParameterError("capacitance, thickness and permittivity must be positive")
    area_m2 = c_ff * 1e-15 * thickness_nm * 1e-9 / (epsilon_0 * eps_r)
    area_nm2 = area_m2 * 1e18
    return area_nm2, math.sqrt(area_nm2)
