"""
Selecting a single optimal fixed point
======================================

For h = (x - y)^2 every constant orbit is optimal. Adding a small well
eps (x - a)^2 picks out the fixed point at a, and the choice survives
small random changes of the coefficients.
"""
from xyaubry import builtin, tpo_experiment

# %%
for eps in (0.0, 0.05):
    rep = tpo_experiment(builtin("squared_difference"), 0.3, eps, trials=10, n_cells=64)
    print(f"eps={eps}: unique={rep.unique_min} minimizer={rep.minimizer} "
          f"g''={rep.second_derivative} Aubry={rep.aubry_letters} "
          f"(node nearest a: {rep.nearest_node}) robust to {rep.robustness_radius}")
