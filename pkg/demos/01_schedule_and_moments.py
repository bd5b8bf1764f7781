"""
Block schedules and exact moments
=================================

The counterexample is assembled from blocks ``k = 1, 2, ...``.  Block ``k``
has a length ``ell_k``, a spacing ``M_k`` and a cumulative offset ``N_k``.
Its innovation ``e_k`` is a three-point variable that is almost always
zero, which is what lets ``f`` be an L1 coboundary while staying
square-integrable.
"""

from quenchlab.schedule import (
    build_schedule,
    check_summability,
    enumerate_block_moments,
    exact_block_moments,
    pow2_ell,
)

# %%
# The default rule ``M_k = k ell_k^5 M_{k-1}`` grows super-exponentially.
# Everything is kept as exact Python integers.
s = build_schedule(pow2_ell(6))
for k in range(1, s.k_max + 1):
    print(f"k={k}  ell={s.ell_k(k):3d}  M={s.M_k(k)}  N={s.N_k(k)}")

# %%
# The summability series: with the default rule both summands of each term
# are equal, so term_k = 2/sqrt(k ell_k), i.e. 2/sqrt(k 2^k) here.
rep = check_summability(s)
for k, (t, p) in enumerate(zip(rep.terms, rep.partial_sums), start=1):
    print(f"term_{k} = {t:.6f}   partial sum = {p:.6f}")
print("geometric tail bound:", rep.tail_marker)

# %%
# Closed-form moments of one block, checked against brute-force enumeration
# over all 3^(2 ell) joint outcomes of the entries that f_k reads.
toy = build_schedule((2,), m_rule=[32])
closed, enum = exact_block_moments(toy, 1), enumerate_block_moments(toy, 1)
print("||e_1||^2 :", closed.e_l2_sq, "enumerated", enum.e_l2_sq)
print("||f_1||^2 :", closed.f_l2_sq, "enumerated", enum.f_l2_sq)
print(f"E|g_1|    : {enum.g_l1:.6f} <= bound {closed.g_l1_bound:.6f}")
