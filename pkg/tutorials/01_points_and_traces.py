# %% [markdown]
# Points and traces of Frobenius
#
# Exact rational arithmetic on a curve, then a_p for every prime up to a bound.

# %%
from ecembed.catalog import lookup
from ecembed.curve import add_points, scalar_mul, torsion_order
from ecembed.modp import ap_series, trace_ap

rec = lookup("E3")
E = rec.curve
E  # y^2 + xy + y = x^3 - 131x + 558

# %%
G1, G2, G3 = rec.generators
T = rec.torsion_points[0]
print(torsion_order(E, T))          # 2
print(torsion_order(E, G1))         # None: infinite order

# %%
# multiples grow fast; the coordinates stay exact
for n in (1, 2, 3, 5):
    P = scalar_mul(E, n, G1)
    print(n, len(str(P.x.numerator)), "digits")

# %%
print(add_points(E, G1, T))

# %%
# a_p = p + 1 - #E(F_p); bad primes get 0, +1 or -1
s = ap_series(E, 60)
for e in s.entries:
    print(e.p, e.ap, e.reduction)

# %%
# y^2 = x^3 - x has a_p = 0 whenever p = 3 mod 4
E0 = lookup("E0").curve
print({p: trace_ap(E0, p) for p in (3, 7, 11, 19, 23, 31)})
