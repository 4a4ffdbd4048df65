# %% [markdown]
# # The privacy budget
#
# Round ``l`` spends ``delta(l) / b_hat(l)``, where ``b_hat`` is the smallest
# noise scale and ``delta`` bounds how far one player's change can move the
# transmitted values.  The a-priori bound is ``L2 * M3 * rho(l)``; the
# empirical one is twice the largest action step actually taken.

# %%
from dpnash.harness import load_config
from dpnash.privacy import check_budget_summable, ledger_for_run
from dpnash.seeker import run

cfg = load_config("ieee30-6p-damped")
spec, graphs, s = cfg.game_spec(), cfg.graph_schedule(), cfg.schedule_set()
rec = run(spec, s, graphs, seed=3, horizon=1024)
theory = ledger_for_run(rec, spec, s, "theoretical")
empir = ledger_for_run(rec, spec, s, "empirical")
for l in (1, 10, 64, 256, 1024):
    print(f"l={l:5d}  theoretical {theory.budget_at(l):.3e} (total {theory.epsilon_at(l):.4f})"
          f"   empirical {empir.budget_at(l):.3e} (total {empir.epsilon_at(l):.4f})")

# %% [markdown]
# ``rho(l) / b_hat(l)`` decays like ``l**-3.01``, so the a-priori total is
# finite and later rounds barely add to it.

# %%
rep = check_budget_summable(s)
print(f"sum rho/b_hat: {rep.status}, ~{rep.estimate:.4f}")
for T in (64, 128, 256):
    print(f"eps({4*T}) - eps({2*T}) = {theory.epsilon_at(4*T) - theory.epsilon_at(2*T):.2e}"
          f"   eps({T}) = {theory.epsilon_at(T):.4f}")
