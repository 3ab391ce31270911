# %% [markdown]
# Prime sums and growth fits
#
# F(N) = (1/N) sum_{p <= N} a_p log p / sqrt(p), sampled on a geometric
# schedule and fitted against log log N.  N_MAX is kept small here; the
# `ecembed report` command runs the same thing to 10^6.

# %%
import mpmath

from ecembed.catalog import lookup
from ecembed.fstat import f_ms_many, fit_growth, schedule
from ecembed.modp import ap_series

N0, ALPHA, K = 100, 10, 4
bounds = schedule(N0, ALPHA, K)
bounds

# %%
tables = {}
for cid in ("E0", "E2", "E1", "E3"):
    rec = lookup(cid)
    series = ap_series(rec.curve, bounds[-1])
    tables[cid] = f_ms_many(series, 1, 1, bounds)

for cid, samples in tables.items():
    print(cid, [mpmath.nstr(s.value, 6) for s in samples])

# %%
# the fitted exponent is a diagnostic; compare it with the known rank yourself
for cid, samples in tables.items():
    fit = fit_growth(samples)
    print(f"{cid}: rank {lookup(cid).claimed_rank}, rhat {fit.rhat:+.3f} +- {fit.stderr:.3f}")

# %%
# without the 1/N factor the same sums
series = ap_series(lookup("E3").curve, bounds[-1])
raw = f_ms_many(series, 1, 1, bounds, normalization="none")
print([mpmath.nstr(s.value, 6) for s in raw])
