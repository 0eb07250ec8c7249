"""
Approaching the incompressible limit
====================================

Well-prepared data (acoustic part of size epsilon) are run at three Mach
numbers and compared with the limit model started from the projected
velocity.  The velocity error should fall roughly linearly in epsilon.
"""

import matplotlib.pyplot as plt
import numpy as np

from lowmach import Grid, PhysParams
from lowmach.prep import general_data
from lowmach.sweep import run_sweep

grid = Grid(2, 32)
base = general_data(seed=7, amplitude=1.0, modes=4, grid=grid)
params = PhysParams(epsilon=0.25, mu=0.05)
epsilons = [0.2, 0.1, 0.05]

result = run_sweep(base, params, epsilons, T=0.3, kind="well_prepared", samples=15)
for eps, err in zip(result.epsilons, result.errors_u):
    print(f"eps = {eps:<5}  sup_t |u - v| = {err:.3e}")
print(f"observed order {result.orders['u']:.2f}")

# %%
# The dashed line has slope one.

eps = np.array(result.epsilons)
plt.loglog(eps, result.errors_u, "o-", label="velocity error")
plt.loglog(eps, result.errors_u[0] * eps / eps[0], "k--", label="first order")
plt.loglog(eps, result.errors_q, "s-", label="sup ||q||")
plt.xlabel("epsilon")
plt.legend()
plt.show()
