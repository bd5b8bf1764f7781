"""
Zero martingale part: variance and projections
==============================================

With ``ell_k = 2^k``, ``E[S_n^2]/n`` goes to zero and every projection
``P_0 S_n`` is small.  So the process satisfies Heyde's condition with a
martingale part ``m = 0``, yet it has no quenched limit.
"""

from quenchlab.counterexample import heyde_report, projection_P0_Sn, projection_P0_shift_g
from quenchlab.schedule import build_schedule, pow2_ell

s = build_schedule(pow2_ell(4))

# %%
# The exact variance, from the overlap of the triangular weights.
for row in heyde_report(s, [2 ** j for j in range(4, 15)]):
    print(f"n = {row.n:6d}   E[S_n^2]/n = {row.variance_over_n:.6f}   ||P_0 S_n|| = {row.p0_norm:.4f}")

# %%
# Near the end of a block the projection picks up one triangular weight.
N2 = s.N_k(2)
for n in range(N2 - 8, N2 + 1):
    p, q = projection_P0_Sn(s, n), projection_P0_shift_g(s, n)
    print(f"n = N_2{n - N2:+d}:  P_0 U^n g coeff {q.coeff:2d}   P_0 S_n coeff {p.coeff:3d}   ||.||^2 = {float(p.l2_sq):.5f} <= 2/k = {2 / p.k}")
