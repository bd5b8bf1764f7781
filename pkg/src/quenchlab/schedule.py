"""Block parameter schedules for the L1-coboundary counterexample.

A schedule fixes, for blocks ``k = 1..K``, the block length ``ell[k]``,
the block spacing ``M[k]`` and the cumulative offsets
``N[k] = M[1] + ... + M[k]``.  Spacings grow super-exponentially under the
default rule, so ``M`` and ``N`` are kept as Python integers and every
real-valued ratio is formed in log space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union


class ScheduleError(ValueError):
    """Raised for parameter sequences that violate the schedule invariants."""


@dataclass(frozen=True)
class ParameterSchedule:
    ell: tuple
    M: tuple
    M0: int = 1
    N: tuple = field(init=False, default=())

    def __post_init__(self):
        ell = tuple(int(x) for x in self.ell)
        M = tuple(int(x) for x in self.M)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "M", M)
        if not ell:
            raise ScheduleError("schedule needs at least one block")
        if len(ell) != len(M):
            raise ScheduleError(f"ell has {len(ell)} entries but M has {len(M)}")
        if self.M0 < 1:
            raise ScheduleError("M0 must be a positive integer")
        _check_increasing("ell", ell)
        _check_increasing("M", M)
        for k, (l, m) in enumerate(zip(ell, M), start=1):
            if m < 2 * l:
                raise ScheduleError(f"M_{k} = {m} < 2*ell_{k} = {2 * l}")
        N, total = [], 0
        for m in M:
            total += m
            N.append(total)
        object.__setattr__(self, "N", tuple(N))

    @property
    def k_max(self) -> int:
        return len(self.ell)

    def ell_k(self, k: int) -> int:
        return self.ell[self._index(k)]

    def M_k(self, k: int) -> int:
        """Block spacing, with ``M_k(0) == M0``."""
        if k == 0:
            return self.M0
        return self.M[self._index(k)]

    def N_k(self, k: int) -> int:
        """Cumulative offset, with ``N_k(0) == 0``."""
        if k == 0:
            return 0
        return self.N[self._index(k)]

    def block_of(self, n: int) -> int:
        """The unique ``k`` with ``N_{k-1} < n <= N_k``."""
        if n < 1:
            raise ValueError(f"time index must be >= 1, got {n}")
        for k, Nk in enumerate(self.N, start=1):
            if n <= Nk:
                return k
        raise ValueError(f"n = {n} exceeds N_{self.k_max} = {self.N[-1]}")

    def law(self, k: int) -> "ThreePointLaw":
        return ThreePointLaw(k=k, ell=self.ell_k(k), M=self.M_k(k))

    def truncate(self, k_max: int) -> "ParameterSchedule":
        if not 1 <= k_max <= self.k_max:
            raise ValueError(f"k_max must lie in 1..{self.k_max}")
        return ParameterSchedule(self.ell[:k_max], self.M[:k_max], self.M0)

    def _index(self, k: int) -> int:
        if not 1 <= k <= self.k_max:
            raise IndexError(f"block {k} outside 1..{self.k_max}")
        return k - 1

    def to_dict(self) -> dict:
        return {
            "ell": list(self.ell),
            "M": [str(m) for m in self.M],
            "N": [str(n) for n in self.N],
            "M0": str(self.M0),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSchedule":
        sched = cls(
            ell=tuple(int(x) for x in data["ell"]),
            M=tuple(int(x) for x in data["M"]),
            M0=int(data.get("M0", 1)),
        )
        if "N" in data and tuple(int(x) for x in data["N"]) != sched.N:
            raise ScheduleError("stored N does not match the partial sums of M")
        return sched

    @classmethod
    def from_json(cls, text: str) -> "ParameterSchedule":
        return cls.from_dict(json.loads(text))


def _check_increasing(name, seq):
    if seq[0] < 1:
        raise ScheduleError(f"{name} must be positive")
    for a, b in zip(seq, seq[1:]):
        if b <= a:
            raise ScheduleError(f"{name} must be strictly increasing: {a} then {b}")


@dataclass(frozen=True)
class ThreePointLaw:
    """Symmetric law putting mass ``1/(2kM)`` on each of ``+-sqrt(M)/ell``."""

    k: int
    ell: int
    M: int

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.M) / self.ell

    @property
    def magnitude_sq(self) -> Fraction:
        return Fraction(self.M, self.ell ** 2)

    @property
    def tail_prob(self) -> Fraction:
        return Fraction(1, 2 * self.k * self.M)

    @property
    def mean(self) -> Fraction:
        return Fraction(0)

    @property
    def second_moment(self) -> Fraction:
        return self.magnitude_sq * 2 * self.tail_prob

    @property
    def abs_moment(self) -> float:
        return self.magnitude * float(2 * self.tail_prob)


@dataclass(frozen=True)
class SummabilityReport:
    terms: tuple
    partial_sums: tuple
    tail_bound: Optional[float]  # None means no bound could be certified
    log_summands: tuple = ()

    @property
    def tail_marker(self) -> Union[float, str]:
        return "unbounded" if self.tail_bound is None else self.tail_bound


def build_schedule(
    ell: Sequence[int],
    k_max: Optional[int] = None,
    m_rule: Union[str, Sequence[int]] = "default",
    M0: int = 1,
) -> ParameterSchedule:
    """Build a validated schedule.

    Parameters
    ----------
    ell : sequence of int
        Block lengths; must be strictly increasing and positive.  Only the
        first ``k_max`` entries are used.
    k_max : int, optional
        Number of blocks (defaults to ``len(ell)``).
    m_rule : "default" or sequence of int
        ``"default"`` applies ``M_k = k * ell_k**5 * M_{k-1}`` followed by
        ``M_k = max(M_k, 2 * ell_k)``; otherwise the explicit spacings.
    """
    ell = tuple(int(x) for x in ell)
    if k_max is None:
        k_max = len(ell)
    if k_max < 1:
        raise ScheduleError("k_max must be >= 1")
    if len(ell) < k_max:
        raise ScheduleError(f"need {k_max} block lengths, got {len(ell)}")
    ell = ell[:k_max]
    _check_increasing("ell", ell)
    if isinstance(m_rule, str):
        if m_rule != "default":
            raise ScheduleError(f"unknown M rule {m_rule!r}")
        M, prev = [], M0
        for k, l in enumerate(ell, start=1):
            prev = max(k * l ** 5 * prev, 2 * l)
            M.append(prev)
    else:
        M = [int(m) for m in m_rule][:k_max]
        if len(M) < k_max:
            raise ScheduleError(f"need {k_max} spacings, got {len(M)}")
    return ParameterSchedule(ell=ell, M=tuple(M), M0=M0)


def pow2_ell(k_max: int) -> tuple:
    """Block lengths ``ell_k = 2**k``."""
    return tuple(2 ** k for k in range(1, k_max + 1))


def _log_terms(s: ParameterSchedule, k: int):
    ell = s.ell_k(k)
    first = -0.5 * (math.log(k) + math.log(ell))
    second = 2 * math.log(ell) + 0.5 * (math.log(s.M_k(k - 1)) - math.log(s.M_k(k)))
    return first, second


def check_summability(s: ParameterSchedule) -> SummabilityReport:
    """Partial sums of ``1/sqrt(k ell_k) + ell_k**2 sqrt(M_{k-1}/M_k)``.

    A geometric tail bound ``t_K r / (1 - r)`` is attached when the last
    term ratio ``r`` is below one; with a single block there is no ratio
    and the tail is reported as unbounded.
    """
    terms, sums, logs, total = [], [], [], 0.0
    for k in range(1, s.k_max + 1):
        a, b = _log_terms(s, k)
        term = math.exp(a) + math.exp(b)
        total += term
        terms.append(term)
        sums.append(total)
        logs.append((a, b))
    tail = None
    if len(terms) >= 2:
        ratio = terms[-1] / terms[-2]
        if ratio < 1:
            tail = terms[-1] * ratio / (1 - ratio)
    return SummabilityReport(tuple(terms), tuple(sums), tail, tuple(logs))


def coefficient(s: ParameterSchedule, k: int, r: int) -> int:
    """Triangular weight of ``e_k`` shifted by ``r`` inside ``g_k``.

    Out-of-range ``r`` gives 0 so overlap sums need no bounds checks.
    """
    ell = s.ell_k(k)
    if r < 0 or r > 2 * ell - 2:
        return 0
    if r <= ell - 1:
        return r + 1
    return 2 * ell - 1 - r


def coefficients(s: ParameterSchedule, k: int) -> list:
    return [coefficient(s, k, r) for r in range(2 * s.ell_k(k) - 1)]


@dataclass(frozen=True)
class BlockMoments:
    e_l1: float
    e_l2_sq: Fraction
    f_l2_sq: Fraction
    g_l1_bound: float


def exact_block_moments(s: ParameterSchedule, k: int) -> BlockMoments:
    ell, M = s.ell_k(k), s.M_k(k)
    sqrt_m = math.sqrt(M)
    return BlockMoments(
        e_l1=1.0 / (k * ell * sqrt_m),
        e_l2_sq=Fraction(1, k * ell * ell),
        f_l2_sq=Fraction(2, k * ell),
        g_l1_bound=ell / (k * sqrt_m),
    )


def l2_tail_bound(s: ParameterSchedule, k_from: int) -> float:
    """``sum_{k > k_from} 2/(k ell_k)`` over the blocks held by ``s``."""
    return sum(2.0 / (k * s.ell_k(k)) for k in range(k_from + 1, s.k_max + 1))


def l1_tail_bound(s: ParameterSchedule, k_from: int) -> float:
    return sum(s.ell_k(k) / (k * math.sqrt(s.M_k(k))) for k in range(k_from + 1, s.k_max + 1))


@dataclass(frozen=True)
class EnumeratedMoments:
    e_l2_sq: Fraction
    f_mean: Fraction
    f_l2_sq: Fraction
    g_mean: Fraction
    g_l1: float
    outcomes: int


def enumerate_block_moments(s: ParameterSchedule, k: int, max_ell: int = 3) -> EnumeratedMoments:
    """Moments of ``e_k``, ``f_k`` and ``g_k`` by summing over every joint outcome.

    ``f_k`` depends on ``2 ell_k`` lattice entries, so the sum has
    ``3 ** (2 ell_k)`` terms; it is refused beyond ``ell_k = max_ell``.
    Everything except ``E|g_k|`` (which carries the irrational magnitude)
    is an exact rational; the two means are in units of the magnitude.
    """
    from itertools import product

    ell = s.ell_k(k)
    if ell > max_ell:
        raise ValueError(f"ell_{k} = {ell} too large to enumerate (limit {max_ell})")
    law = s.law(k)
    p = law.tail_prob
    prob = {1: p, -1: p, 0: 1 - 2 * p}
    f_pat = [1] * ell + [-1] * ell
    c = coefficients(s, k)
    e2 = sum(prob[x] * x * x for x in (-1, 0, 1)) * law.magnitude_sq
    f1 = f2 = g1 = Fraction(0)
    g_abs = Fraction(0)
    count = 0
    for signs in product((-1, 0, 1), repeat=2 * ell):
        w = Fraction(1)
        for x in signs:
            w *= prob[x]
        f = sum(a * x for a, x in zip(f_pat, signs))
        g = sum(a * x for a, x in zip(c, signs))  # first 2*ell - 1 entries
        f1 += w * f
        f2 += w * f * f
        g1 += w * g
        g_abs += w * abs(g)
        count += 1
    v = law.magnitude
    return EnumeratedMoments(
        e_l2_sq=e2,
        f_mean=f1,
        f_l2_sq=f2 * law.magnitude_sq,
        g_mean=g1,
        g_l1=float(g_abs) * v,
        outcomes=count,
    )
