# %% [markdown]
# Embedding, loops and heights
#
# Each rational point goes to (x/(1+|x|), y/(1+|y|), a, b), where (a, b) are
# the coordinates of its elliptic logarithm in the period cell.  Torsion
# points trace closed loops; points of infinite order never repeat.

# %%
import mpmath

from ecembed.catalog import lookup
from ecembed.curve import affine, scalar_mul
from ecembed.heights import gram_and_regulator
from ecembed.lattice import distinct_points, embed, loop_rank, periods, sample_loop

E0 = lookup("E0").curve
L = periods(E0)
print(L.omega1, L.tau)               # 5.2441..., i

# %%
for x in (0, 1, -1):
    e = embed(E0, L, affine(x, 0))
    print(x, [mpmath.nstr(v, 6) for v in e.as_tuple()])

# %%
loop = sample_loop(E0, affine(0, 0), 10)
len(distinct_points([s.point for s in loop]))    # 2: (0,0) and O

# %%
rec = lookup("E1")
loop = sample_loop(rec.curve, rec.generators[0], 10)
len(distinct_points([s.point for s in loop]))    # 21

# %%
# precision grows with n^2 * height
[s.point.precision_bits for s in loop[10:]]

# %%
for cid in ("E2", "E1", "E3"):
    rec = lookup(cid)
    hd = gram_and_regulator(rec.curve, rec.generators)
    lr, rels = loop_rank(rec.curve, rec.generators)
    print(cid, "heights", [mpmath.nstr(hd.gram[i][i], 8) for i in range(len(hd.gram))],
          "gram rank", hd.rank, "loop rank", lr, "regulator", mpmath.nstr(hd.regulator, 8))

# %%
# a dependent set: the relation shows up in both tests
E2 = lookup("E2")
P = E2.generators[0]
print(loop_rank(E2.curve, [P, scalar_mul(E2.curve, 3, P)]))
print(gram_and_regulator(E2.curve, [P, scalar_mul(E2.curve, 3, P)]).rank)
