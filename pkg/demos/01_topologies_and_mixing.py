# %% [markdown]
# # Time-varying directed topologies
#
# Six players talk over a schedule of four directed graphs that repeats
# forever.  No single graph is strongly connected, but the union of any
# four consecutive ones is.  Each sender splits what it transmits evenly
# over its out-neighbours and itself, which makes every weight matrix
# column-stochastic but generally not row-stochastic.

# %%
import numpy as np

from dpnash.graphs import (backward_product, check_d_strong_connectivity, estimate_mixing,
                           is_strongly_connected, read_topology)
from dpnash.harness import load_config

graphs = load_config("ieee30-6p").graph_schedule()
for k, g in enumerate(graphs.graphs, 1):
    print(f"graph {k}: edges {sorted(g.edges)}  strongly connected: {is_strongly_connected(g)}")
print("jointly connected over D = 4:", check_d_strong_connectivity(graphs))

# %% [markdown]
# The weight matrix of the first phase.  Columns sum to one; rows do not.

# %%
B = graphs.weight_at(0)
np.set_printoptions(precision=3, suppress=True)
print(B)
print("column sums:", B.sum(axis=0))
print("row sums:   ", B.sum(axis=1))

# %% [markdown]
# ## Products of weight matrices
#
# The product ``B(l) ... B(0)`` approaches a rank-one matrix whose columns
# all equal a stochastic vector ``psi``.  Because ``psi`` is not uniform,
# plain averaging would be biased; push-sum divides by a weight that
# experiences the same imbalance.

# %%
P = backward_product(graphs, 60, 0)
print(P)

est = estimate_mixing(graphs, 200)
print("psi (phase 0):   ", est.psi_at(0))
print(f"decay rate {est.lambda_fit:.4f}, constant {est.c1_fit:.3f}, R^2 {est.r_squared:.4f}")
print(f"smallest row sum of any product: {est.delta_bar:.3f}")

# %% [markdown]
# The fitted envelope ``c1 * lambda**l`` sits above every observed deviation.

# %%
for l in (0, 25, 50, 100, 150, 200):
    print(f"l={l:3d}  deviation {est.deviation[l]:.2e}  envelope {est.bound(l):.2e}")
