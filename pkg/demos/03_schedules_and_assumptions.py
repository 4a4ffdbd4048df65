# %% [markdown]
# # Step sizes, weakening factor and noise scale
#
# The scenario uses
# ``mu(l) = 1 / (1 + 1e-4 * 2**(0.01 l + 2))``,
# ``rho(l) = 1 / (1 + 0.1 l**2.01)``, noise scale ``b(l) = l + 2`` and
# momentum 0.6.  The validator checks range, monotonicity and every
# summability condition numerically.

# %%
import numpy as np

from dpnash.schedules import (Schedule, ScheduleSet, eval_schedules, remark5_preset,
                              summation_oracle, validate_assumptions)

s = remark5_preset(6)
for l in (0, 64, 300, 1000, 2000):
    mu, rho, beta, b = eval_schedules(s, 0, l)
    print(f"l={l:5d}  mu={mu:.5f}  rho={rho:.3e}  b={b:.0f}")

# %% [markdown]
# Note that the step size stays close to one for roughly the first thousand
# rounds and only then collapses: ``2**(0.01 l)`` needs ``l`` around 1300
# before ``1e-4 * 2**(0.01 l + 2)`` reaches one.

# %%
report = validate_assumptions(s)
print("\n".join(report.lines()))

# %% [markdown]
# ## The summation oracle
#
# Partial sums in doubling blocks plus a power-law tail fitted to the last
# terms.  The uncertainty shrinks as the checkpoints stop moving.  The slow
# series ``rho * b`` decays like ``l**-1.01`` and needs half a million terms.

# %%
for name, term in [("geometric 0.5**l", lambda l: 0.5 ** l),
                   ("rho", lambda l: 1 / (1 + 0.1 * l ** 2.01)),
                   ("rho * b", lambda l: (l + 2) / (1 + 0.1 * l ** 2.01)),
                   ("harmonic", lambda l: 1 / (l + 1))]:
    r = summation_oracle(term, tol=1e-3, cap=1 << 20, series=name)
    print(f"{name:18s} {r.status:10s} ~{r.estimate:12.4f} +/- {r.tail_bound:.2g} "
          f"({r.terms_used} terms, exponent {r.exponent:.3f})")

# %% [markdown]
# Counterexamples fail the way they should.

# %%
harmonic = ScheduleSet.uniform(6, s.mu[0], Schedule("rational-power", {"c": 1, "p": 1, "offset": 2}),
                               0.6, Schedule("affine", {"c": 1, "d": 2}))
check = validate_assumptions(harmonic, cap=1 << 16)["A6.3 sum rho * b_check < inf"]
print(check.name, "->", "pass" if check.passed else "fail", "|", check.detail)
