"""Monte Carlo harness for quenched and annealed laws of ``S_n / sqrt(n)``.

Replicates are processed in fixed-size blocks keyed only by replicate id,
so results are identical for any worker count; blocks are concatenated in
order and sorted at the end.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import counterexample as cx
from . import families
from .families import ProcessSpec
from .innovations import InnovationLattice, future_signs, make_lattice

BLOCK = 512
THREADS_ENV = "QUENCHLAB_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        values.setflags(write=False)
        self.values = values

    @property
    def R(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.R

    def left(self, x):
        """Left limit ``F(x-)``."""
        return np.searchsorted(self.values, x, side="left") / self.R

    def mean(self) -> float:
        return float(self.values.mean())

    def var(self) -> float:
        return float(self.values.var(ddof=1)) if self.R > 1 else 0.0

    def rows(self):
        """Two-column ``(x, F(x))`` data at the distinct sample points."""
        xs = np.unique(self.values)
        return list(zip(xs.tolist(), self(xs).tolist()))


def normal_cdf(x, sigma2: float):
    x = np.asarray(x, dtype=float)
    if sigma2 == 0:
        return (x >= 0).astype(float)
    return ndtr(x / math.sqrt(sigma2))


def ks_to_normal(cdf: EmpiricalCdf, sigma2: float) -> float:
    """Sup distance between ``cdf`` and the centered normal with variance ``sigma2``.

    Both one-sided gaps are taken at every sample point, so atoms are
    handled exactly.  ``sigma2 = 0`` compares against the unit step at 0.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    x = np.unique(cdf.values)
    if sigma2 == 0:
        x = np.union1d(x, [0.0])
        target = normal_cdf(x, 0.0)
        target_left = (x > 0).astype(float)
    else:
        target = target_left = normal_cdf(x, sigma2)
    gaps = np.maximum(np.abs(cdf(x) - target), np.abs(cdf.left(x) - target_left))
    return float(gaps.max())


def ks_two_sample(a: EmpiricalCdf, b: EmpiricalCdf) -> float:
    x = np.union1d(a.values, b.values)
    return float(np.abs(a(x) - b(x)).max())


@dataclass
class Simulation:
    cdf: EmpiricalCdf
    sums: np.ndarray
    cond_means: np.ndarray
    centered_sums: np.ndarray
    n: int
    mode: str
    centered: bool

    @property
    def nu(self) -> np.ndarray:
        return self.cond_means / math.sqrt(self.n)


def _blocks(R):
    return [np.arange(a, min(a + BLOCK, R)) for a in range(0, R, BLOCK)]


def _run_blocks(fn, R, workers):
    blocks = _blocks(R)
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    return parts


def simulate(
    spec: ProcessSpec,
    n: int,
    R: int,
    mode: str = "quenched",
    seed: int = 0,
    past=None,
    centered: bool = False,
    workers: Optional[int] = None,
) -> Simulation:
    """Draw ``R`` replicates of ``S_n/sqrt(n)`` (or its conditionally centered form).

    Parameters
    ----------
    mode : {"quenched", "annealed"}
        Quenched fixes one past (``past`` or the one implied by ``seed``) and
        redraws only the future.
    past : InnovationLattice or int, optional
        Frozen past for the quenched mode.
    centered : bool
        Subtract ``E[S_n | F_0]`` before scaling.
    """
    if R < 100:
        raise ValueError("need at least 100 replicates")
    if spec.needs_schedule and past is None:
        past = make_lattice(seed, spec.schedule)

    def run(ids):
        return families.sample_sums(spec, n, ids, mode=mode, seed=seed, past=past)

    parts = _run_blocks(run, R, workers)
    sums, cond, cent = (np.concatenate([p[i] for p in parts]) for i in range(3))
    vals = cent if centered else sums
    return Simulation(EmpiricalCdf(vals / math.sqrt(n)), sums, cond, cent, n, mode, centered)


def simulate_sums(spec, n, R, mode="quenched", seed=0, past=None, centered=False, workers=None) -> EmpiricalCdf:
    return simulate(spec, n, R, mode, seed, past, centered, workers).cdf


# --- martingale CLT diagnostics ------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    @classmethod
    def of(cls, x) -> "Estimate":
        x = np.asarray(x, dtype=float)
        sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
        return cls(float(x.mean()), sd / math.sqrt(x.size))


@dataclass(frozen=True)
class ConditionRow:
    n: int
    sum_sq: Estimate
    max_tail: Estimate
    max_sq: Estimate
    max_abs: Estimate
    sup_max_sq: float


@dataclass(frozen=True)
class ConditionReport:
    rows: list
    eps: float
    R: int

    def row(self, n) -> ConditionRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)


def martingale_increments(spec: ProcessSpec, n: int, ids, seed: int = 0, past: Optional[InnovationLattice] = None) -> np.ndarray:
    """Array ``(R, n)`` of ``X_{n,j}``, the martingale differences scaled by ``1/sqrt(n)``.

    For iid kinds these are ``eps_j / sqrt(n)``.  For the counterexample
    they are the increments of ``S_n - E^0 S_n``: the future entry at index
    ``j`` times its weight ``-c_{k, j - 1 + N_k - n}``.
    """
    root = math.sqrt(n)
    if spec.kind == "iid":
        rows = [families._innovations(spec, families._rng(seed, families._FUTURE, int(r)), n) for r in ids]
        return np.asarray(rows) / root
    if spec.kind != "counterexample":
        raise families.FamilyError("martingale increments need an iid or counterexample process")
    s = spec.schedule
    cx._check_horizon(s, n)
    lat = past if past is not None else make_lattice(seed, s)
    out = np.zeros((len(ids), n))
    for k in range(1, s.k_max + 1):
        ell, Nk = s.ell_k(k), s.N_k(k)
        # weight is nonzero for j - 1 + N_k - n in [0, 2 ell - 2]
        j_lo = max(1, n - Nk + 1)
        j_hi = min(n, n - Nk + 2 * ell - 1)
        if j_lo > j_hi:
            continue
        js = np.arange(j_lo, j_hi + 1)
        w = -np.asarray([cx.coefficient(s, k, j - 1 + Nk - n) for j in js], dtype=float)
        e = future_signs(lat, k, j_lo, js.size, ids) * lat.magnitude(k)
        out[:, j_lo - 1:j_hi] += e * w
    return out / root


def mcleish_report(
    spec: ProcessSpec,
    n_grid: Sequence[int],
    R: int,
    eps: float = 0.5,
    seed: int = 0,
    workers: Optional[int] = None,
) -> ConditionReport:
    """Estimates of the four martingale-CLT conditions along ``n_grid``.

    Per ``n``: ``sum_j X_{n,j}^2``, ``P(max_j |X_{n,j}| >= eps)``,
    ``E max_j X_{n,j}^2`` and ``E max_j |X_{n,j}|``, each with its Monte Carlo
    standard error; ``sup_max_sq`` is the running maximum of the third.
    """
    rows, sup = [], -math.inf
    for n in n_grid:
        def run(ids, n=n):
            x = martingale_increments(spec, n, ids, seed=seed)
            m = np.abs(x).max(axis=1)
            return (x * x).sum(axis=1), m
        parts = _run_blocks(run, R, workers)
        ssq = np.concatenate([p[0] for p in parts])
        mx = np.concatenate([p[1] for p in parts])
        max_sq = Estimate.of(mx * mx)
        sup = max(sup, max_sq.value)
        rows.append(ConditionRow(n, Estimate.of(ssq), Estimate.of(mx >= eps), max_sq, Estimate.of(mx), sup))
    return ConditionReport(rows, eps, R)


def ergodic_average(spec: ProcessSpec, n: int, seed: int = 0, lattice: Optional[InnovationLattice] = None) -> float:
    """Pathwise ``(1/n) sum_{j<=n} f(T^j)^2``."""
    path = families.sample_path(spec, n, seed=seed, lattice=lattice)
    return float(np.mean(path * path))


@dataclass(frozen=True)
class MaximalTail:
    empirical_tail: float
    se: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.empirical_tail <= self.bound + 3 * self.se


def running_rms_sup(path: np.ndarray) -> float:
    n = np.arange(1, path.size + 1)
    return float(np.sqrt(np.cumsum(path * path) / n).max())


def maximal_tail_check(
    spec: ProcessSpec,
    lam: float,
    n_max: int,
    R: int,
    seed: int = 0,
    workers: Optional[int] = None,
) -> MaximalTail:
    """Frequency of ``sup_{n <= n_max}`` running RMS exceeding ``lam`` vs ``||f||^2/lam^2``."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    def run(ids):
        return np.array([
            running_rms_sup(families.sample_path(spec, n_max, seed=seed, replicate=int(r) + 1))
            for r in ids
        ])

    sup = np.concatenate(_run_blocks(run, R, workers))
    hit = Estimate.of(sup > lam)
    return MaximalTail(hit.value, hit.se, families.f_l2_sq(spec) / lam ** 2)


# --- quenched versus annealed --------------------------------------------


@dataclass
class PastResult:
    label: str
    nu: float
    raw: EmpiricalCdf
    centered: EmpiricalCdf
    ks_raw: float
    ks_centered: float
    shift_defect: float  # max |G_n(z) - F_n(z - nu)| over a grid; zero up to ties


@dataclass
class QuenchedComparison:
    n: int
    sigma2: float
    pasts: list = field(default_factory=list)

    @property
    def nu_dispersion(self) -> float:
        nus = np.array([p.nu for p in self.pasts])
        return float(nus.max() - nus.min()) if nus.size else 0.0

    def cdf_gap(self, z: float, a: int = 0, b: int = 1) -> float:
        return float(abs(self.pasts[a].raw(z) - self.pasts[b].raw(z)))

    def centered_ks(self, a: int = 0, b: int = 1) -> float:
        return ks_two_sample(self.pasts[a].centered, self.pasts[b].centered)


def quenched_compare(
    spec: ProcessSpec,
    pasts: Sequence,
    n: int,
    R: int,
    seed: int = 0,
    sigma2: Optional[float] = None,
    z_grid: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
) -> QuenchedComparison:
    """Quenched laws of ``S_n/sqrt(n)`` under several frozen pasts.

    ``pasts`` holds integer seeds or lattices (lattice kinds only).  For
    each past the raw and conditionally centered CDFs are kept together with
    the drift ``nu = E^0 S_n / sqrt(n)``; the raw law is the centered one
    shifted by ``nu`` whenever the centered part does not see the past.
    """
    if sigma2 is None:
        sigma2 = families.limit_variance(spec)
    if z_grid is None:
        z_grid = np.linspace(-4, 4, 161)
    out = QuenchedComparison(n, sigma2)
    for idx, past in enumerate(pasts):
        if isinstance(past, InnovationLattice):
            label = f"lattice[{idx}] seed={past.seed} overrides={len(past.overrides)}"
            sim = simulate(spec, n, R, "quenched", seed=past.seed, past=past, workers=workers)
        else:
            label = f"seed={int(past)}"
            if spec.needs_schedule:
                lat = make_lattice(int(past), spec.schedule)
                sim = simulate(spec, n, R, "quenched", seed=int(past), past=lat, workers=workers)
            else:
                sim = simulate(spec, n, R, "quenched", seed=seed + idx, past=int(past), workers=workers)
        root = math.sqrt(n)
        nu = float(np.mean(sim.cond_means)) / root
        centered = EmpiricalCdf(sim.centered_sums / root)
        defect = float(np.abs(sim.cdf(z_grid) - centered(z_grid - nu)).max())
        out.pasts.append(
            PastResult(label, nu, sim.cdf, centered, ks_to_normal(sim.cdf, sigma2), ks_to_normal(centered, sigma2), defect)
        )
    return out
