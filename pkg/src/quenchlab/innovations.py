"""Lazy, reproducible innovation lattice and quenched scenarios.

The lattice holds one independent three-point variable for every block
``k >= 1`` and every integer time index ``i``.  Entries are never generated
sequentially: each one is a pure function of ``(seed, k, i, stream)``
obtained from a Philox block, so entries near ``-N_k`` (far beyond 2**63 for
large schedules) cost the same as entries near zero.

Block ``k = 0`` is reserved for an auxiliary Rademacher row used as the
martingale component of perturbed processes.

A :class:`Scenario` freezes everything at indices ``i <= 0`` (the past
sigma-field) and redraws indices ``i >= 1`` from a substream selected by the
replicate id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from . import _philox
from .schedule import ParameterSchedule

MASK64 = (1 << 64) - 1
TWO128 = 1 << 128
_MASK32 = np.uint64(0xFFFFFFFF)
_CACHE_LIMIT = 4096

BACKGROUNDS = ("random", "zero")


class LatticeError(ValueError):
    pass


def thresholds(denominator: int) -> Tuple[int, int]:
    """Integer cut points for a three-point draw with tail ``1/denominator``.

    A 128-bit uniform ``u`` maps to ``+1`` iff ``u * D < 2**128`` and to
    ``-1`` iff ``2**128 <= u * D < 2**129``.  Both conditions are equivalent
    to ``u < ceil(2**128 / D)`` and ``u < ceil(2**129 / D)``.
    """
    return -(-TWO128 // denominator), -(-(2 * TWO128) // denominator)


def classify(u: int, denominator: int) -> int:
    """Reference sign of one 128-bit draw by exact cross-multiplication."""
    prod = u * denominator
    if prod < TWO128:
        return 1
    if prod < 2 * TWO128:
        return -1
    return 0


def _lt128(hi, lo, bound):
    bhi = np.uint64(bound >> 64)
    blo = np.uint64(bound & MASK64)
    return (hi < bhi) | ((hi == bhi) & (lo < blo))


def classify_array(hi, lo, denominator: int) -> np.ndarray:
    """Vectorized :func:`classify` on ``(hi, lo)`` halves of 128-bit draws."""
    t1, t2 = thresholds(denominator)
    plus = _lt128(hi, lo, t1)
    nonzero = _lt128(hi, lo, t2)
    out = np.zeros(np.shape(hi), dtype=np.int8)
    out[nonzero] = -1
    out[plus] = 1
    return out


def _fold(hi_part: int) -> int:
    if hi_part == 0:
        return 0
    return int(_philox.splitmix64(hi_part & MASK64)) >> 32


def _segments(start: int, count: int):
    """Split ``[start, start+count)`` where the bits above 64 change."""
    pos = 0
    while pos < count:
        i = start + pos
        low = i & MASK64
        run = min(count - pos, (1 << 64) - low)
        yield pos, low, run, i >> 64
        pos += run


def _draw(key, k: int, start: int, count: int, stream, denominator: int) -> np.ndarray:
    """Signs in ``{-1, 0, 1}`` for indices ``start..start+count-1``.

    ``key`` and ``stream`` may be arrays of shape ``(R, 1)``; the result then
    has shape ``(R, count)``.
    """
    key = np.asarray(key, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    shape = np.broadcast_shapes(key.shape, stream.shape, (count,))
    out = np.empty(shape, dtype=np.int8)
    k0, k1 = _philox.split_key(key)
    for pos, low, run, hi_part in _segments(start, count):
        idx = np.uint64(low) + np.arange(run, dtype=np.uint64)
        kk1 = k1 ^ np.uint64(_fold(hi_part))
        hi, lo = _philox.uniform128(idx & _MASK32, idx >> np.uint64(32), k, stream, k0, kk1)
        out[..., pos:pos + run] = classify_array(hi, lo, denominator)
    return out


def _draw_rademacher(key, start: int, count: int, stream) -> np.ndarray:
    """Row ``k = 0``: 128 packed Rademacher signs per Philox block."""
    key = np.asarray(key, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    shape = np.broadcast_shapes(key.shape, stream.shape, (count,))
    out = np.empty(shape, dtype=np.int8)
    first, last = start >> 7, (start + count - 1) >> 7
    k0, k1 = _philox.split_key(key)
    for pos, low, run, hi_part in _segments(first, last - first + 1):
        idx = np.uint64(low) + np.arange(run, dtype=np.uint64)
        kk1 = k1 ^ np.uint64(_fold(hi_part))
        words = _philox.philox4x32(idx & _MASK32, idx >> np.uint64(32), 0, stream, k0, kk1)
        # little-endian bit order within each 32-bit word, words in order
        w = np.stack([x.astype("<u4") for x in words], axis=-1)
        bits = np.unpackbits(w.view(np.uint8), axis=-1, bitorder="little")
        flat = bits.reshape(*bits.shape[:-2], -1)
        signs = (2 * flat.astype(np.int8) - 1)
        lo_t = (first + pos) << 7
        a = max(start, lo_t)
        b = min(start + count, (first + pos + run) << 7)
        out[..., a - start:b - start] = signs[..., a - lo_t:b - lo_t]
    return out


def derive_keys(seed: int, ids) -> np.ndarray:
    """Independent 64-bit lattice keys for annealed replicates."""
    ids = np.asarray(ids, dtype=np.uint64)
    base = _philox.splitmix64(np.uint64(int(seed) & MASK64))
    with np.errstate(over="ignore"):
        return _philox.splitmix64(base ^ (ids * np.uint64(0xD1B54A32D192ED03) + np.uint64(1)))


class InnovationLattice:
    """The doubly-infinite independent array ``e_k(i)``.

    Parameters
    ----------
    seed : int
        Master 64-bit key.
    schedule : ParameterSchedule
        Supplies the law of every block.
    overrides : mapping, optional
        ``{(k, i): value}`` with each value in ``{-v_k, 0, +v_k}``.
    background : {"random", "zero"}
        ``"zero"`` sets every non-overridden entry to 0; used to isolate
        forced configurations.
    """

    def __init__(
        self,
        seed: int,
        schedule: ParameterSchedule,
        overrides: Optional[Mapping[Tuple[int, int], float]] = None,
        background: str = "random",
    ):
        if background not in BACKGROUNDS:
            raise LatticeError(f"background must be one of {BACKGROUNDS}")
        self.seed = int(seed) & MASK64
        self.schedule = schedule
        self.background = background
        self._signs: Dict[Tuple[int, int], int] = {}
        for (k, i), value in (overrides or {}).items():
            self._signs[(int(k), int(i))] = self._to_sign(int(k), value)
        self._cache: Dict[tuple, np.ndarray] = {}

    def _to_sign(self, k: int, value) -> int:
        if not 1 <= k <= self.schedule.k_max:
            raise LatticeError(f"override block {k} outside 1..{self.schedule.k_max}")
        value = float(value)
        if value == 0.0:
            return 0
        v = self.magnitude(k)
        if math.isclose(abs(value), v, rel_tol=1e-12):
            return 1 if value > 0 else -1
        raise LatticeError(f"override {value!r} not in the support {{0, +-{v!r}}} of block {k}")

    def magnitude(self, k: int) -> float:
        return 1.0 if k == 0 else self.schedule.law(k).magnitude

    def denominator(self, k: int) -> int:
        return self.schedule.law(k).tail_prob.denominator

    @property
    def overrides(self) -> Dict[Tuple[int, int], float]:
        return {key: s * self.magnitude(key[0]) for key, s in self._signs.items()}

    @property
    def override_signs(self) -> Dict[Tuple[int, int], int]:
        return dict(self._signs)

    def with_overrides(self, extra: Mapping[Tuple[int, int], float]) -> "InnovationLattice":
        merged = self.overrides
        merged.update(extra)
        return InnovationLattice(self.seed, self.schedule, merged, self.background)

    def _raw(self, k: int, start: int, count: int, stream=0, key=None) -> np.ndarray:
        key = self.seed if key is None else key
        if k == 0:
            return _draw_rademacher(key, start, count, stream)
        return _draw(key, k, start, count, stream, self.denominator(k))

    def signs(self, k: int, start: int, count: int) -> np.ndarray:
        """Signs of ``e_k(start), ..., e_k(start + count - 1)``, overrides applied."""
        ck = (k, start, count)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit
        if self.background == "zero" and k != 0:
            out = np.zeros(count, dtype=np.int8)
        else:
            out = self._raw(k, start, count)
        if self._signs:
            for (kk, i), s in self._signs.items():
                if kk == k and start <= i < start + count:
                    out[i - start] = s
        out.setflags(write=False)
        if count <= _CACHE_LIMIT:
            out = self._cache.setdefault(ck, out)
        return out

    def window(self, k: int, start: int, count: int) -> np.ndarray:
        return self.signs(k, start, count) * self.magnitude(k)

    def value_at(self, k: int, i: int) -> float:
        return float(self.window(k, i, 1)[0])

    def overrides_to_json(self) -> str:
        return overrides_to_json(self.overrides)


def make_lattice(seed, schedule, overrides=None, background="random") -> InnovationLattice:
    return InnovationLattice(seed, schedule, overrides, background)


def force_event(lat: InnovationLattice, k: int, n: int, sign: int = 1) -> InnovationLattice:
    """Force the configuration that makes ``E^0 U^n g`` maximal in block ``k``.

    The entry at ``n + ell_k - 1 - N_k`` is set to ``sign * v_k`` and the other
    ``2 ell_k - 2`` entries of the window starting at ``n - N_k`` to zero.
    ``sign=-1`` gives the mirror event, which pushes the conditional mean of
    the partial sums upward instead of downward.
    """
    s = lat.schedule
    lo, hi = s.N_k(k - 1), s.N_k(k)
    if not lo < n <= hi:
        raise LatticeError(f"n = {n} outside block {k}: need {lo} < n <= {hi}")
    if sign not in (1, -1):
        raise LatticeError("sign must be +1 or -1")
    ell = s.ell_k(k)
    base = n - hi
    v = lat.magnitude(k)
    forced = {(k, base + i): 0.0 for i in range(2 * ell - 1)}
    forced[(k, base + ell - 1)] = sign * v
    return lat.with_overrides(forced)


@dataclass(frozen=True)
class Scenario:
    """A frozen past with a fresh future per replicate.

    Indices ``i <= 0`` are read from ``lattice`` (including its overrides and
    background); indices ``i >= 1`` always come from the random substream
    ``replicate_id + 1`` of the same key, whatever the base background.
    """

    lattice: InnovationLattice
    replicate_id: int = 0

    @property
    def schedule(self) -> ParameterSchedule:
        return self.lattice.schedule

    def signs(self, k: int, start: int, count: int) -> np.ndarray:
        stop = start + count
        if stop <= 1:
            return self.lattice.signs(k, start, count)
        if start >= 1:
            return future_signs(self.lattice, k, start, count, [self.replicate_id])[0]
        past = self.lattice.signs(k, start, 1 - start)
        fut = future_signs(self.lattice, k, 1, stop - 1, [self.replicate_id])[0]
        return np.concatenate([past, fut])

    def window(self, k: int, start: int, count: int) -> np.ndarray:
        return self.signs(k, start, count) * self.lattice.magnitude(k)

    def value_at(self, k: int, i: int) -> float:
        return float(self.window(k, i, 1)[0])


def make_scenario(lat: InnovationLattice, replicate_id: int = 0) -> Scenario:
    if replicate_id < 0 or replicate_id >= 2 ** 32 - 1:
        raise LatticeError("replicate_id must lie in [0, 2**32 - 1)")
    return Scenario(lat, int(replicate_id))


def future_signs(lat: InnovationLattice, k: int, start: int, count: int, replicate_ids) -> np.ndarray:
    """Future entries (``start >= 1``) for many replicates at once, shape ``(R, count)``."""
    if start < 1:
        raise LatticeError("future draws need start >= 1")
    streams = np.asarray(replicate_ids, dtype=np.uint64).reshape(-1, 1) + np.uint64(1)
    return lat._raw(k, start, count, stream=streams)


def annealed_signs(lat: InnovationLattice, k: int, start: int, count: int, replicate_ids) -> np.ndarray:
    """Entries of independent fresh lattices, one per replicate, shape ``(R, count)``."""
    keys = derive_keys(lat.seed, replicate_ids).reshape(-1, 1)
    return lat._raw(k, start, count, stream=0, key=keys)


def overrides_to_json(overrides: Mapping[Tuple[int, int], float]) -> str:
    rows = [
        {"k": k, "i": str(i), "value": repr(float(v))}
        for (k, i), v in sorted(overrides.items())
    ]
    return json.dumps(rows, indent=2)


def overrides_from_json(text: str) -> Dict[Tuple[int, int], float]:
    return {(int(r["k"]), int(r["i"])): float(r["value"]) for r in json.loads(text)}


def iter_override_items(lat: InnovationLattice) -> Iterable[Tuple[int, int, float]]:
    for (k, i), v in sorted(lat.overrides.items()):
        yield k, i, v
