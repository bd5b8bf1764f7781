"""
The innovation lattice and forced events
========================================

Every entry ``e_k(i)`` is a pure function of ``(seed, k, i)``, drawn from a
counter-based generator.  So an entry at ``i = -N_k`` costs the same as one
at ``i = 0``, and two runs with the same seed agree exactly.
"""

import numpy as np

from quenchlab.innovations import force_event, make_lattice, make_scenario
from quenchlab.schedule import build_schedule

s = build_schedule((2, 4))
lat = make_lattice(seed=1, schedule=s)

# %%
# A window deep in the past of block 2 (indices near -N_2).
print("block 2 around -N_2:", lat.window(2, -s.N_k(2) - 3, 8))

# %%
# Nonzero entries are rare: probability 1/(k M_k).  Block 1 has M_1 = 32.
signs = lat.signs(1, -500_000, 1_000_000)
print("nonzero frequency:", np.count_nonzero(signs) / signs.size, " exact:", 1 / 32)

# %%
# A scenario freezes the past (i <= 0) and redraws the future per replicate.
a, b = make_scenario(lat, 1), make_scenario(lat, 2)
print("shared past :", a.value_at(1, -5) == b.value_at(1, -5))
print("futures     :", a.signs(0, 1, 16), b.signs(0, 1, 16))

# %%
# Forcing an event: one maximal entry in a window of 2 ell_k - 1, the rest zero.
n = s.N_k(2) - 10
forced = force_event(lat, 2, n)
for (k, i), v in sorted(forced.overrides.items()):
    print(f"  e_{k}({i}) = {v}")
