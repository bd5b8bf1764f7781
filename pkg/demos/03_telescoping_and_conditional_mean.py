"""
Partial sums telescope
======================

``f = g - Ug`` with ``g = sum_k U^{-N_k} g_k``, so
``S_n(f) = g(1) - g(n+1)``.  The conditional mean given the past keeps
only the part of ``g(n+1)`` built from entries at indices ``<= 0``.
"""

import math

import numpy as np

from quenchlab.counterexample import conditional_mean, partial_sums, sample_counterexample_sums
from quenchlab.innovations import force_event, make_lattice
from quenchlab.schedule import build_schedule

s = build_schedule((2, 4))

# %%
# Direct summation and the telescoped form agree to rounding on every seed.
worst = 0.0
for seed in range(200):
    lat = make_lattice(seed, s)
    worst = max(worst, np.abs(partial_sums(lat, 200, "direct") - partial_sums(lat, 200, "telescoped")).max())
print("max |direct - telescoped| over 200 seeds, n <= 200:", worst)

# %%
# A forced entry in the past of block 2 moves E[S_n | F_0] by sqrt(M_2) = 256.
n0 = s.N_k(1) + 5
lat = force_event(make_lattice(0, s, background="zero"), 2, n0)
print("E^0 S_n at n = n0 - 1:", conditional_mean(lat, n0 - 1))

# %%
# Tower property: averaging S_n - E^0 S_n over fresh futures gives zero.
sums, cond, centered = sample_counterexample_sums(make_lattice(3, s), 36, np.arange(20_000))
se = centered.std(ddof=1) / math.sqrt(centered.size)
print(f"mean of S_n - E^0 S_n: {centered.mean():.4f} (3 SE = {3 * se:.4f})")
