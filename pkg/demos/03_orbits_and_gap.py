"""
Minimizing periodic orbits in continuous space
==============================================

Away from the grid, period-n orbits are points of [0, 1]^n and their
action is a sum of h over consecutive sites. Coordinate descent finds
constant orbits sitting on the diagonal minimizer, and swapping the
pointwise min and max of two crossing orbits never raises the action.
"""
import numpy as np

from xyaubry import builtin, crossing_surgery, gap_phi, orbit_descent

spec = builtin("squared_difference_plus_well", 0.5)

# %%
for seed in range(3):
    tr = orbit_descent(spec, 5, seed=seed)
    print(f"seed {seed}: {np.round(tr.final, 6)}  energy {tr.final_energy:.2e}  "
          f"sweeps {tr.sweeps}")

# %%
# The exchange step on two orbits that cross.
x, y = np.array([0.1, 0.8, 0.3]), np.array([0.6, 0.2, 0.5])
w, z, delta = crossing_surgery(x, y, spec)
print(w, z, "action change", delta)

# %%
# Leaving the minimizer costs a definite amount: the least reduced action
# of a period-n grid orbit that strays at least delta from m.
for delta in (0.1, 0.25):
    table = gap_phi(spec, 8, delta, 10)
    print(delta, [round(v, 5) for _, v in table.per_n])
