"""
Subactions, Mañé potential and Aubry classes
============================================

Subtracting alpha leaves reduced weights r whose cycles all have
nonnegative sum. A calibrated subaction v turns r into a nonnegative
graph with the same cycle sums, and shortest paths in that graph give the
Mañé matrix D. Letters with D(a, a) = 0 form the Aubry set.
"""
import numpy as np

from xyaubry import analyze, polynomial

# %%
# h(x, y) = (x - y)^2 + q(x) with q having equal wells at 1/4 and 3/4.
c = np.zeros((5, 5))
c[:, 0] = [0.03515625, -0.375, 1.375, -2.0, 1.0]
c[2, 0] += 1.0
c[1, 1] -= 2.0
c[0, 2] += 1.0
an = analyze(polynomial(c), 16)

print("alpha       ", an.spectral.alpha_grid)
print("subaction   ", np.round(an.subaction.values, 4))
print("min r_u edge", an.reweighted.min())

# %%
# Two Aubry letters, one per well. Moving between the wells costs
# something in both directions, so they fall into separate classes.
print("Aubry letters", an.aubry.aubry_letters, "->", an.grid.nodes[list(an.aubry.aubry_letters)])
print("classes      ", an.aubry.classes)
a, b = an.aubry.aubry_letters
print("H(a,b)+H(b,a) =", an.barrier.closed_form[a, b] + an.barrier.closed_form[b, a])

# %%
# The closed-form barrier agrees with the liminf of long walk minima.
print("window", an.barrier.window, "agreement", an.barrier.agreement)

# %%
# A fixed point on an Aubry letter is static; a letter off the wells is not.
print(an.static_check((a,)).is_static, an.static_check((0,)).is_static)
