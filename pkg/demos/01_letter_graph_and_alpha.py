"""
The letter graph and the optimal average
========================================

A potential h(x, y) on [0, 1]^2 becomes a complete weighted digraph once
[0, 1] is replaced by a uniform grid: letters are grid points and the edge
a -> b weighs h(a, b). Periodic configurations are closed walks, so the
least average of h along an orbit is a minimum cycle mean.
"""
import numpy as np

from xyaubry import build_graph, builtin, diagonal_min, jenkinson_estimate, karp_min_mean_cycle

# %%
# With h = -xy on the two-letter grid {0, 1} the weights are just products.
grid, w = build_graph(builtin("product"), 1)
print(w)
alpha, witness, _ = karp_min_mean_cycle(w)
print("alpha =", alpha, "witness cycle", witness)

# %%
# Under the twist condition the optimal cycle is a self-loop, so alpha is
# the smallest diagonal entry. The well potential has its minimum at 1/2.
spec = builtin("squared_difference_plus_well", 0.5)
grid, w = build_graph(spec, 64)
alpha, witness, _ = karp_min_mean_cycle(w)
dm = diagonal_min(spec, 64)
print(f"alpha={alpha:.3g}  min diag={np.min(np.diag(w)):.3g}  "
      f"witness at x={grid.nodes[witness[0]]}  m={dm.m_set}")

# %%
# The least average over open paths of n edges tends to alpha, but an
# open path may stop halfway round the optimal cycle. Here the only
# optimal cycle alternates 0 -> 1 -> 0 with mean -1/2, and odd-length
# paths beat it by 1/(2n).
w2 = np.array([[0.0, -1.0], [0.0, 0.0]])
print("alpha =", karp_min_mean_cycle(w2)[0])
est = jenkinson_estimate(w2, 9)
print([round(v, 4) for _, v in est.per_n])
