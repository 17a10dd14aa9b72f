"""Minimize the single-species energy J(u) = int 1/2|grad u|^2 - lam*F(u)
on the unit square for growing lam and watch lam^-1 * min J approach the
bulk value -alpha*|Omega| = -1/6.

The gap closes like 0.369 * perimeter / sqrt(lam): the minimizer pays a
boundary-layer toll along the Dirichlet walls.

Run:  python demos/02_single_species_minimum.py   (about a minute)
"""

import numpy as np

from competelab import (ScaledFamily, SolverConfig, build_rectangle, logistic,
                        minimize_multistart)

mask = build_rectangle(1.0, 1.0, 1 / 64)
fam = ScaledFamily(base=logistic(), k=1, eps=())
cfg = SolverConfig(restarts=1, max_iters=40000)
target = -logistic().alpha * mask.measure

print("lam      min J        lam^-1 min J   layer prediction")
for lam in (50, 100, 200, 400, 800):
    best, _ = minimize_multistart(mask, fam, float(lam), cfg=cfg)
    pred = target + 0.369 * 4.0 / np.sqrt(lam)
    print(f"{lam:5d}  {best.energy:11.5f}  {best.energy / lam:12.6f}"
          f"   {pred:12.6f}")
print(f"\nbulk value -alpha*|Omega| = {target:.6f}")
print("the sequence decreases toward the bulk value; closing to within 10%"
      " needs lam of order 8000 on this domain")
