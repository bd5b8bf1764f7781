"""Reference stationary processes with known limit behaviour.

Four kinds are supported:

``iid``
    ``f = eps_0`` for Rademacher, Gaussian or three-point innovations; a
    martingale difference, so quenched and annealed limits coincide.
``linear``
    ``f = sum_j a_j eps_{-j}`` with finitely many coefficients.  Projection
    norms are ``|a_i| sigma`` so the summability of projections is explicit.
``counterexample``
    The L1-coboundary process of :mod:`quenchlab.counterexample`.
``perturbed``
    ``sigma * eta_0 + f`` with ``eta`` an independent Rademacher row and ``f``
    the counterexample.

iid and linear kinds draw from per-replicate numpy ``Philox`` generators
keyed by ``(seed, tag, replicate)``; the lattice-based kinds draw from the
innovation lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import counterexample as cx
from .innovations import InnovationLattice, Scenario, derive_keys, make_lattice
from .schedule import ParameterSchedule, l2_tail_bound

KINDS = ("iid", "linear", "counterexample", "perturbed")
INNOVATIONS = ("rademacher", "gaussian", "three_point")
MAX_SUPPORT = 10_000

_PAST, _FUTURE, _ANNEALED, _PATH = 1, 2, 3, 4


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessSpec:
    kind: str = "iid"
    innovation: str = "rademacher"
    coefficients: tuple = (1.0,)
    schedule: Optional[ParameterSchedule] = None
    law_block: int = 1
    martingale_scale: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(a) for a in self.coefficients))
        if self.kind not in KINDS:
            raise FamilyError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.innovation not in INNOVATIONS:
            raise FamilyError(f"innovation must be one of {INNOVATIONS}")
        if not self.coefficients or len(self.coefficients) > MAX_SUPPORT + 1:
            raise FamilyError(f"need between 1 and {MAX_SUPPORT + 1} coefficients")
        if self.martingale_scale < 0:
            raise FamilyError("martingale_scale must be non-negative")
        if self.needs_schedule or self.innovation == "three_point":
            if self.schedule is None:
                raise FamilyError(f"{self.kind}/{self.innovation} needs a schedule")
        if self.innovation == "three_point":
            law = self.schedule.law(self.law_block)
            if law.tail_prob.denominator >= 2 ** 63:
                raise FamilyError("three-point innovation law too fine for 63-bit draws")

    @property
    def needs_schedule(self) -> bool:
        return self.kind in ("counterexample", "perturbed")

    @property
    def d(self) -> int:
        return len(self.coefficients) - 1

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "innovation": self.innovation,
            "coefficients": [repr(a) for a in self.coefficients],
            "law_block": self.law_block,
            "martingale_scale": repr(self.martingale_scale),
        }
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessSpec":
        sched = data.get("schedule")
        return cls(
            kind=data.get("kind", "iid"),
            innovation=data.get("innovation", "rademacher"),
            coefficients=tuple(float(a) for a in data.get("coefficients", (1.0,))),
            schedule=ParameterSchedule.from_dict(sched) if sched else None,
            law_block=int(data.get("law_block", 1)),
            martingale_scale=float(data.get("martingale_scale", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ProcessSpec":
        return cls.from_dict(json.loads(text))


def iid(innovation="rademacher", schedule=None, law_block=1) -> ProcessSpec:
    return ProcessSpec("iid", innovation, schedule=schedule, law_block=law_block)


def linear(coefficients, innovation="rademacher") -> ProcessSpec:
    return ProcessSpec("linear", innovation, coefficients=tuple(coefficients))


def counterexample(schedule: ParameterSchedule) -> ProcessSpec:
    return ProcessSpec("counterexample", schedule=schedule)


def perturbed(schedule: ParameterSchedule, martingale_scale: float = 1.0) -> ProcessSpec:
    return ProcessSpec("perturbed", schedule=schedule, martingale_scale=martingale_scale)


# --- closed-form moments -----------------------------------------------


def innovation_variance(spec: ProcessSpec):
    if spec.innovation == "three_point":
        return spec.schedule.law(spec.law_block).second_moment
    return Fraction(1)


def _cx_l2_sq(s: ParameterSchedule) -> float:
    return l2_tail_bound(s, 0)


def f_l2_sq(spec: ProcessSpec) -> float:
    """``||f||_2^2``."""
    if spec.kind == "iid":
        return float(innovation_variance(spec))
    if spec.kind == "linear":
        return float(innovation_variance(spec)) * sum(a * a for a in spec.coefficients)
    total = _cx_l2_sq(spec.schedule)
    if spec.kind == "perturbed":
        total += spec.martingale_scale ** 2
    return total


def limit_variance(spec: ProcessSpec) -> float:
    """Variance of the martingale part, i.e. the annealed limit of ``E[S_n^2]/n``."""
    if spec.kind == "iid":
        return float(innovation_variance(spec))
    if spec.kind == "linear":
        return float(innovation_variance(spec)) * sum(spec.coefficients) ** 2
    if spec.kind == "perturbed":
        return spec.martingale_scale ** 2
    return 0.0


def linear_weights(coefficients, n: int) -> np.ndarray:
    """Weights ``w_s`` with ``S_n = sum_{s=1-d}^{n} w_s eps_s``, ordered by ``s``."""
    a = np.asarray(coefficients, dtype=float)
    return np.convolve(np.ones(n), a)[::-1]


def exact_variance_sum(spec: ProcessSpec, n: int) -> float:
    """``E[S_n^2]`` in closed form."""
    if spec.kind == "iid":
        return n * float(innovation_variance(spec))
    if spec.kind == "linear":
        w = linear_weights(spec.coefficients, n)
        return float(innovation_variance(spec)) * float(w @ w)
    total = cx.exact_variance_Sn(spec.schedule, n)
    if spec.kind == "perturbed":
        total += n * spec.martingale_scale ** 2
    return total


# --- Hannan sums ---------------------------------------------------------


@dataclass(frozen=True)
class HannanReport:
    partial_sums: np.ndarray
    verdict: str  # "holds" or "diverging"
    decay_exponent: float  # fitted p in |a_i| ~ i^-p over the second half

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])


def hannan_partial_sums(spec: ProcessSpec, i_max: int, p_threshold: float = 1.1) -> HannanReport:
    """Partial sums of ``||P_{-i} f||_2 = |a_i| sigma`` for ``i = 0..i_max``.

    The verdict is read off the coefficient tail: exact zeros over the
    second half of the range mean finite support; otherwise a log-log fit of
    ``|a_i|`` on that half estimates the decay exponent ``p``, and ``p``
    below ``p_threshold`` is flagged as a diverging trend.
    """
    if spec.kind != "linear":
        raise FamilyError("projection sums are only available in closed form for linear processes")
    sigma = math.sqrt(float(innovation_variance(spec)))
    a = np.zeros(i_max + 1)
    m = min(len(spec.coefficients), i_max + 1)
    a[:m] = np.abs(spec.coefficients[:m])
    sums = np.cumsum(a * sigma)
    half = np.arange(max(1, (i_max + 1) // 2), i_max + 1)
    tail = a[half]
    nz = tail > 0
    if nz.sum() < 2:
        return HannanReport(sums, "holds", math.inf)
    slope = np.polyfit(np.log(half[nz]), np.log(tail[nz]), 1)[0]
    p = -float(slope)
    return HannanReport(sums, "holds" if p > p_threshold else "diverging", p)


# --- sampling --------------------------------------------------------------


def _rng(seed: int, *words) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *words])
    return np.random.Generator(np.random.Philox(ss))


def _innovations(spec: ProcessSpec, rng: np.random.Generator, size) -> np.ndarray:
    if spec.innovation == "rademacher":
        return 2.0 * rng.integers(0, 2, size=size, dtype=np.int8) - 1.0
    if spec.innovation == "gaussian":
        return rng.standard_normal(size)
    law = spec.schedule.law(spec.law_block)
    u = rng.integers(0, law.tail_prob.denominator, size=size, dtype=np.int64)
    out = np.zeros(size)
    out[u == 0] = law.magnitude
    out[u == 1] = -law.magnitude
    return out


def sample_sums(
    spec: ProcessSpec,
    n: int,
    replicate_ids,
    mode: str = "quenched",
    seed: int = 0,
    past=None,
):
    """``(S_n, E[S_n | F_0], S_n - E[S_n | F_0])`` for each replicate.

    For the lattice kinds ``past`` may be an
    :class:`~quenchlab.innovations.InnovationLattice` whose indices ``<= 0``
    are frozen; for iid/linear kinds it is an integer seed for the frozen
    past (defaults to ``seed``).  ``mode="annealed"`` ignores ``past``.
    """
    if mode not in ("quenched", "annealed"):
        raise ValueError(f"unknown mode {mode!r}")
    ids = np.asarray(replicate_ids, dtype=np.int64)
    if spec.needs_schedule:
        lat = past if isinstance(past, InnovationLattice) else make_lattice(seed, spec.schedule)
        return cx.sample_counterexample_sums(
            lat, n, ids, mode, spec.martingale_scale if spec.kind == "perturbed" else 0.0
        )
    d = spec.d if spec.kind == "linear" else 0
    w = linear_weights(spec.coefficients, n) if spec.kind == "linear" else None
    past_seed = seed if past is None else int(past)
    if mode == "quenched" and d:
        frozen = _innovations(spec, _rng(past_seed, _PAST), d)
        cond_q = float(frozen @ w[:d])
    centered = np.empty(ids.size)
    cond = np.zeros(ids.size)
    for j, r in enumerate(ids):
        if mode == "quenched":
            fut = _innovations(spec, _rng(seed, _FUTURE, int(r)), n)
            c = cond_q if d else 0.0
        else:
            rng = _rng(seed, _ANNEALED, int(r))
            c = float(_innovations(spec, rng, d) @ w[:d]) if d else 0.0
            fut = _innovations(spec, rng, n)
        centered[j] = fut @ w[d:] if d else fut.sum()
        cond[j] = c
    return cond + centered, cond, centered


def sample_path(
    spec: ProcessSpec,
    n: int,
    seed: int = 0,
    lattice: Optional[InnovationLattice] = None,
    replicate: int = 0,
) -> np.ndarray:
    """``f(1), ..., f(n)`` along one realization."""
    if spec.needs_schedule:
        if lattice is None:
            key = seed if replicate == 0 else int(derive_keys(seed, [replicate])[0])
            lattice = make_lattice(key, spec.schedule)
        lat = lattice
        path = cx.f_series(lat, 1, n)
        if spec.kind == "perturbed" and spec.martingale_scale:
            path = path + spec.martingale_scale * lat.signs(0, 1, n)
        return path
    rng = _rng(seed, _PATH, replicate)
    eps = _innovations(spec, rng, n + spec.d)
    if spec.kind == "iid":
        return eps
    return np.correlate(eps, np.asarray(spec.coefficients[::-1]), mode="valid")


# --- martingale plus coboundary -----------------------------------------


@dataclass(frozen=True)
class Decomposition:
    Y1: float
    Y2: float
    nu: float

    @property
    def total(self) -> float:
        return self.Y1 + self.Y2 + self.nu


def _martingale_sum(spec: ProcessSpec, scn: Scenario, n: int) -> float:
    if spec.kind != "perturbed" or not spec.martingale_scale:
        return 0.0
    return spec.martingale_scale * float(scn.signs(0, 1, n).sum(dtype=np.int64))


def _require_lattice_kind(spec):
    if not spec.needs_schedule:
        raise FamilyError("needs a counterexample or perturbed process")


def decompose_sum(spec: ProcessSpec, scn: Scenario, n: int) -> Decomposition:
    """Split ``S_n(m + f)/sqrt(n)`` into martingale, centered and drift parts.

    ``Y1 = S_n(m)/sqrt(n)``, ``Y2 = (S_n(f) - E^0 S_n(f))/sqrt(n)`` and
    ``nu = E^0 S_n(f)/sqrt(n)``; only ``nu`` depends on the frozen past.
    """
    _require_lattice_kind(spec)
    root = math.sqrt(n)
    drift = cx.conditional_mean(scn, n)
    s_f = cx.partial_sum(scn, n, "telescoped")
    return Decomposition(_martingale_sum(spec, scn, n) / root, (s_f - drift) / root, drift / root)


def coboundary_sum(spec: ProcessSpec, scn: Scenario, n: int) -> float:
    """``S_n = S_n(m) + U g - U^{n+1} g``."""
    _require_lattice_kind(spec)
    return _martingale_sum(spec, scn, n) + cx.eval_g(scn, 1) - cx.eval_g(scn, n + 1)


def direct_sum(spec: ProcessSpec, scn: Scenario, n: int) -> float:
    """``S_n`` by adding ``n`` increments one by one."""
    _require_lattice_kind(spec)
    return _martingale_sum(spec, scn, n) + cx.partial_sum(scn, n, "direct")
