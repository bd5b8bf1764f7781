"""The L1-coboundary process whose partial sums fail the quenched CLT.

With ``h_k = e_k + U e_k + ... + U^{ell_k - 1} e_k`` the process is

    f = sum_k U^{-N_k} (h_k - U^{ell_k} h_k),
    g = sum_k U^{-N_k} g_k,   g_k = sum_r c_{k,r} U^r e_k,

so that ``f = g - U g`` and ``S_n(f) = U g - U^{n+1} g``.  Shifting ``e_k`` by
``U^t`` reads lattice index ``t - N_k + r``, so every quantity here is a
finite weighted sum of lattice entries once the block count is truncated.

Functions taking a ``src`` accept either an
:class:`~quenchlab.innovations.InnovationLattice` or a
:class:`~quenchlab.innovations.Scenario`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .innovations import (
    InnovationLattice,
    LatticeError,
    annealed_signs,
    force_event,
    future_signs,
    make_lattice,
)
from .schedule import ParameterSchedule, coefficient, coefficients


class WindowError(ValueError):
    """A time index has no block under the configured truncation."""


def _kmax(src, k_max_used):
    k_max = src.schedule.k_max
    if k_max_used is None:
        return k_max
    if not 1 <= k_max_used <= k_max:
        raise ValueError(f"k_max_used must lie in 1..{k_max}")
    return k_max_used


def _f_pattern(ell):
    return np.concatenate([np.ones(ell), -np.ones(ell)])


def _g_pattern(s, k):
    return np.asarray(coefficients(s, k), dtype=float)


@dataclass(frozen=True)
class WindowFootprint:
    """Lattice intervals ``[lo, hi]`` read by ``U^t g``, one per block."""

    t: int
    intervals: dict

    def width(self, k):
        lo, hi = self.intervals[k]
        return hi - lo + 1


def footprint(s: ParameterSchedule, t: int, k_max_used=None) -> WindowFootprint:
    K = s.k_max if k_max_used is None else k_max_used
    return WindowFootprint(
        t, {k: (t - s.N_k(k), t - s.N_k(k) + 2 * s.ell_k(k) - 2) for k in range(1, K + 1)}
    )


def eval_f(src, t: int, k_max_used: Optional[int] = None) -> float:
    s = src.schedule
    total = 0.0
    for k in range(1, _kmax(src, k_max_used) + 1):
        ell = s.ell_k(k)
        w = src.window(k, t - s.N_k(k), 2 * ell)
        total += w[:ell].sum() - w[ell:].sum()
    return float(total)


def eval_g(src, t: int, k_max_used: Optional[int] = None) -> float:
    s = src.schedule
    total = 0.0
    for k in range(1, _kmax(src, k_max_used) + 1):
        ell = s.ell_k(k)
        total += _g_pattern(s, k) @ src.window(k, t - s.N_k(k), 2 * ell - 1)
    return float(total)


def f_series(src, t0: int, count: int, k_max_used: Optional[int] = None) -> np.ndarray:
    """``f(t0), ..., f(t0 + count - 1)`` in one pass per block."""
    s = src.schedule
    out = np.zeros(count)
    for k in range(1, _kmax(src, k_max_used) + 1):
        ell = s.ell_k(k)
        w = src.window(k, t0 - s.N_k(k), count + 2 * ell - 1)
        out += np.correlate(w, _f_pattern(ell), mode="valid")
    return out


def g_series(src, t0: int, count: int, k_max_used: Optional[int] = None) -> np.ndarray:
    s = src.schedule
    out = np.zeros(count)
    for k in range(1, _kmax(src, k_max_used) + 1):
        ell = s.ell_k(k)
        w = src.window(k, t0 - s.N_k(k), count + 2 * ell - 2)
        out += np.correlate(w, _g_pattern(s, k), mode="valid")
    return out


def partial_sum(src, n: int, mode: str = "direct", k_max_used: Optional[int] = None) -> float:
    """``S_n(f) = f(1) + ... + f(n)``.

    ``mode="telescoped"`` evaluates ``g(1) - g(n + 1)`` instead of the sum.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode == "direct":
        return float(f_series(src, 1, n, k_max_used).sum())
    if mode == "telescoped":
        return eval_g(src, 1, k_max_used) - eval_g(src, n + 1, k_max_used)
    raise ValueError(f"unknown mode {mode!r}")


def partial_sums(src, n_max: int, mode: str = "direct", k_max_used: Optional[int] = None) -> np.ndarray:
    """``S_1, ..., S_{n_max}`` as an array."""
    if mode == "direct":
        return np.cumsum(f_series(src, 1, n_max, k_max_used))
    if mode == "telescoped":
        return eval_g(src, 1, k_max_used) - g_series(src, 2, n_max, k_max_used)
    raise ValueError(f"unknown mode {mode!r}")


def _leading_term(src, m: int):
    """Block-``k`` part of ``E^0 U^m g`` and whether it was truncated."""
    s = src.schedule
    k = s.block_of(m)
    ell, Nk = s.ell_k(k), s.N_k(k)
    c = _g_pattern(s, k)
    if m <= Nk - 2 * ell + 2:
        return k, float(c @ src.window(k, m - Nk, 2 * ell - 1)), False
    width = Nk - m + 1
    return k, float(c[:width] @ src.window(k, m - Nk, width)), True


def _remote_term(src, m: int, k: int, k_max_used=None) -> float:
    """Blocks ``j > k``: their windows at time ``m`` lie entirely in the past."""
    s = src.schedule
    total = 0.0
    for j in range(k + 1, _kmax(src, k_max_used) + 1):
        total += _g_pattern(s, j) @ src.window(j, m - s.N_k(j), 2 * s.ell_k(j) - 1)
    return float(total)


def shifted_g_conditional(src, m: int, k_max_used: Optional[int] = None):
    """``E^0 U^m g`` split as ``(k, leading, remote, truncated)``."""
    s = src.schedule
    K = _kmax(src, k_max_used)
    if m > s.N_k(K):
        raise WindowError(f"time {m} beyond N_{K} = {s.N_k(K)}; no block under this truncation")
    k, lead, trunc = _leading_term(src, m)
    return k, lead, _remote_term(src, m, k, K), trunc


def conditional_mean(src, n: int, k_max_used: Optional[int] = None) -> float:
    """``E[S_n(f) | F_0] = g(1) - E^0 U^{n+1} g`` using only the frozen past."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _, lead, remote, _ = shifted_g_conditional(src, n + 1, k_max_used)
    return eval_g(src, 1, k_max_used) - lead - remote


def exact_variance_Sn(s: ParameterSchedule, n: int, k_max_used: Optional[int] = None, exact: bool = False):
    """``E[S_n(f)^2]`` from ``S_n = sum_r (c_r - c_{r-n}) e_k(1 - N_k + r)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    K = s.k_max if k_max_used is None else k_max_used
    total = Fraction(0)
    for k in range(1, K + 1):
        total += Fraction(_overlap(s, k, n), k * s.ell_k(k) ** 2)
    return total if exact else float(total)


def _overlap(s, k, n):
    ell = s.ell_k(k)
    if n >= 2 * ell - 1:
        return 2 * sum(c * c for c in coefficients(s, k))
    return sum(
        (coefficient(s, k, r) - coefficient(s, k, r - n)) ** 2 for r in range(n + 2 * ell - 1)
    )


def variance_tail_bound(s: ParameterSchedule, n: int, k_from: int) -> float:
    """Bound on the variance carried by blocks ``k > k_from``.

    Uses ``4 ell_k / k`` when ``ell_k <= n`` and ``4 n**2 / (k ell_k)`` otherwise.
    """
    total = 0.0
    for k in range(k_from + 1, s.k_max + 1):
        ell = s.ell_k(k)
        total += 4 * ell / k if ell <= n else 4 * n * n / (k * ell)
    return total


@dataclass(frozen=True)
class Projection:
    n: int
    k: int
    coeff: int
    l2_sq: Fraction

    @property
    def l2_norm(self) -> float:
        return math.sqrt(self.l2_sq)


def projection_P0_shift_g(s: ParameterSchedule, n: int) -> Projection:
    """``P_0 U^n g = c_{k, N_k - n} e_k(0)`` for ``N_{k-1} < n <= N_k``."""
    k = s.block_of(n)
    c = coefficient(s, k, s.N_k(k) - n)
    return Projection(n, k, c, Fraction(c * c, k * s.ell_k(k) ** 2))


def projection_P0_Sn(s: ParameterSchedule, n: int) -> Projection:
    """``P_0 S_n(f)``: the coefficient of ``e_k(0)`` in the partial sum.

    Since ``U g`` carries no index-0 entry, this is ``-P_0 U^{n+1} g``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p = projection_P0_shift_g(s, n + 1)
    return Projection(n, p.k, -p.coeff, p.l2_sq)


@dataclass(frozen=True)
class HeydeRow:
    n: int
    k: int
    variance_over_n: float
    p0_norm: float


def heyde_report(s: ParameterSchedule, n_grid: Sequence[int]) -> list:
    """``E[S_n^2]/n`` and ``||P_0 S_n||_2`` along a grid of ``n``.

    Both shrinking along the grid is the finite-range picture of a zero
    martingale part.
    """
    rows = []
    for n in n_grid:
        p = projection_P0_Sn(s, n)
        rows.append(HeydeRow(n, p.k, exact_variance_Sn(s, n) / n, p.l2_norm))
    return rows


@dataclass(frozen=True)
class DriftReport:
    k: int
    n: int
    I_value: float
    II_value: float
    nu: float
    ratio: float
    truncated: bool = False
    sign: int = 1


def default_probe(s: ParameterSchedule, k: int) -> int:
    """Last time in block ``k`` whose leading term is untruncated."""
    return s.N_k(k) - 2 * s.ell_k(k) + 2


def drift_on_forced_event(
    s: ParameterSchedule,
    k: int,
    n: Optional[int] = None,
    sign: int = 1,
    lattice: Optional[InnovationLattice] = None,
) -> DriftReport:
    """Leading term, remote term and drift on a lattice carrying the forced event.

    Without ``lattice`` the event is placed on an otherwise all-zero
    lattice.  ``nu`` is ``E^0 S_{n-1} / sqrt(n - 1)`` (NaN when ``n = 1``).
    """
    if n is None:
        n = default_probe(s, k)
    base = lattice if lattice is not None else make_lattice(0, s, background="zero")
    lat = force_event(base, k, n, sign=sign)
    kk, lead, remote, trunc = shifted_g_conditional(lat, n)
    nu = conditional_mean(lat, n - 1) / math.sqrt(n - 1) if n >= 2 else float("nan")
    ratio = lead / math.sqrt(s.N_k(kk))
    return DriftReport(kk, n, lead, remote, nu, ratio, trunc, sign)


def bonferroni_bound(s: ParameterSchedule, k: int, exact: bool = False):
    """Lower bound on the probability that some forced event occurs in block ``k``.

    ``(M - 2l + 2) p q^{2l-2} - (M - 2l)^2 p^2 q^{2l-2} / 2`` with
    ``p = 1/(2kM)`` and ``q = 1 - 1/(kM)``, evaluated in exact rationals.
    """
    M, ell = s.M_k(k), s.ell_k(k)
    p = Fraction(1, 2 * k * M)
    q = (1 - Fraction(1, k * M)) ** (2 * ell - 2)
    value = (M - 2 * ell + 2) * p * q - Fraction((M - 2 * ell) ** 2, 2) * p * p * q
    return value if exact else float(value)


# --- batched Monte Carlo -------------------------------------------------


def _check_horizon(s: ParameterSchedule, n: int):
    if n + 1 > s.N_k(s.k_max):
        raise WindowError(
            f"n + 1 = {n + 1} beyond N_{s.k_max} = {s.N_k(s.k_max)}: "
            "the window overflows the configured blocks"
        )


def _split_g(s, m, k, past: Callable, future: Callable):
    """``U^m g_k`` split into its index<=0 and index>=1 parts."""
    ell = s.ell_k(k)
    lo = m - s.N_k(k)
    c = _g_pattern(s, k)
    width = 2 * ell - 1
    n_past = min(max(0, 1 - lo), width)
    past_part = future_part = 0.0
    if n_past:
        past_part = past(k, lo, n_past) @ c[:n_past]
    if n_past < width:
        future_part = future(k, lo + n_past, width - n_past) @ c[n_past:]
    return past_part, future_part


def sample_counterexample_sums(
    lat: InnovationLattice,
    n: int,
    replicate_ids,
    mode: str = "quenched",
    martingale_scale: float = 0.0,
):
    """Partial sums ``S_n(sigma m + f)`` and their ``F_0``-conditional means.

    Returns ``(sums, cond_means, centered)`` as arrays of shape ``(R,)``;
    ``centered`` is formed from the future entries alone rather than as a
    difference, so atoms of the centered law stay exact.  In
    ``"quenched"`` mode every replicate shares the past of ``lat``; in
    ``"annealed"`` mode each replicate is a fresh independent lattice.  The
    martingale ``m`` is the Rademacher row of the same lattice, so its
    conditional mean is zero.
    """
    s = lat.schedule
    _check_horizon(s, n)
    ids = np.asarray(replicate_ids, dtype=np.int64)
    R = ids.size
    if mode == "quenched":
        def past(k, start, count):
            return lat.signs(k, start, count) * lat.magnitude(k)

        def future(k, start, count):
            return future_signs(lat, k, start, count, ids) * lat.magnitude(k)
    elif mode == "annealed":
        def past(k, start, count):
            return annealed_signs(lat, k, start, count, ids) * lat.magnitude(k)

        future = past
    else:
        raise ValueError(f"unknown mode {mode!r}")

    g1 = np.zeros(R)
    g_past = np.zeros(R)
    g_future = np.zeros(R)
    for k in range(1, s.k_max + 1):
        a, _ = _split_g(s, 1, k, past, future)
        g1 = g1 + a
        b, c = _split_g(s, n + 1, k, past, future)
        g_past = g_past + b
        g_future = g_future + c
    cond = np.broadcast_to(g1 - g_past, (R,))
    centered = -g_future
    if martingale_scale:
        if mode == "quenched":
            eta = future_signs(lat, 0, 1, n, ids)
        else:
            eta = annealed_signs(lat, 0, 1, n, ids)
        centered = centered + martingale_scale * eta.sum(axis=-1, dtype=np.int64)
    centered = np.broadcast_to(centered, (R,))
    return cond + centered, cond, centered
