"""
Martingale CLT checks for reference processes
=============================================

For i.i.d. innovations the quenched and annealed laws of ``S_n/sqrt(n)``
coincide and are normal.  The McLeish conditions, the maximal inequality
and the ergodic average can all be read off the same simulator.
"""

from quenchlab import families, harness
from quenchlab.schedule import build_schedule

rad = families.iid()

# %%
# Quenched (one frozen past) versus annealed (fresh past per replicate).
q = harness.simulate_sums(rad, 10_000, 10_000, "quenched", seed=1)
a = harness.simulate_sums(rad, 10_000, 10_000, "annealed", seed=2)
print("KS quenched:", harness.ks_to_normal(q, 1.0), " annealed:", harness.ks_to_normal(a, 1.0))
print("KS quenched vs annealed:", harness.ks_two_sample(q, a))

# %%
# McLeish quantities.  Rademacher is exact; the three-point law needs Monte Carlo.
three = families.iid("three_point", build_schedule((2,), m_rule=[32]))
for name, spec in (("rademacher", rad), ("three-point", three)):
    row = harness.mcleish_report(spec, [1000], 20_000, seed=3).row(1000)
    print(f"{name:11s}  sum X^2 = {row.sum_sq.value:.5f} +- {row.sum_sq.se:.5f}   "
          f"E max|X| = {row.max_abs.value:.5f}   P(max|X| >= 0.5) = {row.max_tail.value}")

# %%
# Maximal inequality for the running RMS, and the ergodic average of f^2.
tail = harness.maximal_tail_check(families.iid("gaussian"), 2.0, 1000, 2000, seed=4)
print(f"P(f* > 2) = {tail.empirical_tail:.4f} +- {tail.se:.4f}   bound {tail.bound}")
print("ergodic average of e^2 over 10^6 steps:", harness.ergodic_average(three, 10 ** 6, seed=5))
