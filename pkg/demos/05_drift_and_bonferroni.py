"""
The drift witness
=================

On the forced event ``A_n`` the conditional mean of ``U^n g`` is about
``sqrt(N_k)``.  Across the whole block the union of the ``A_n`` has
probability at least about ``1/(2k)``.  This sum diverges, so such pasts
keep recurring.
"""

from quenchlab.counterexample import bonferroni_bound, drift_on_forced_event
from quenchlab.schedule import build_schedule, pow2_ell

s = build_schedule(pow2_ell(8))

# %%
# Leading term I(n), remote term II(n), and I(n)/sqrt(N_k) for k = 1..3.
for k in (1, 2, 3):
    r = drift_on_forced_event(s, k)
    print(f"k={k}: n={r.n}  I={r.I_value:.3f}  II={r.II_value}  I/sqrt(N_k)={r.ratio:.6f}")

# %%
# Bonferroni lower bound on P(some A_n in block k), scaled by 2k.
for k in range(1, 9):
    b = bonferroni_bound(s, k)
    print(f"k={k}: bound = {b:.6f}   2k * bound = {2 * k * b:.6f}")
