"""
Projection sums for linear processes
====================================

For ``f = sum_i a_i eps_{-i}`` the projection norms are ``|a_i|``, so
Hannan's summability condition is a statement about the coefficients.
"""

from quenchlab import families
from quenchlab.families import hannan_partial_sums

# %%
geometric = families.linear([2.0 ** -i for i in range(21)])
rep = hannan_partial_sums(geometric, 20)
print("geometric:", rep.verdict, " total =", rep.total)

# %%
harmonic = families.linear([1.0 / (i + 1) for i in range(families.MAX_SUPPORT + 1)])
rep = hannan_partial_sums(harmonic, 10_000)
print("harmonic :", rep.verdict, f" total = {rep.total:.4f}  fitted decay exponent = {rep.decay_exponent:.3f}")
