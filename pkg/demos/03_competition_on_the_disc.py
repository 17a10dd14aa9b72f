"""Two species on the unit disc under quartic competition.

The second species runs the same logistic law compressed to density scale
eps/sqrt(2).  For small eps the pair coexists in the energy minimizer;
past a threshold the differentiated species dies out.  The sufficient
coexistence bound sqrt(lam/(6 k^2 kappa)) is one-sided: the measured
threshold sits well above it.

Run:  python demos/03_competition_on_the_disc.py   (about a minute)
"""

import numpy as np

from competelab import (SolverConfig, build_disc, coupling_quartic, logistic,
                        minimize_multistart, scaled_family)

lam, kappa = 200.0, 400.0
mask = build_disc(1.0, 1 / 32)
cfg = SolverConfig(restarts=1, max_iters=30000)
eps_star = np.sqrt(lam / (6 * 4 * kappa))
print(f"lam={lam:g} kappa={kappa:g}  sufficient bound eps* = {eps_star:.4f}\n")

print("eps     energy      mass1    mass2    alive")
for eps in (0.1443, 0.3, 0.5, 0.6, 0.7):
    fam = scaled_family(logistic(), 2, (eps,))
    best, _ = minimize_multistart(mask, fam, lam, coupling=coupling_quartic(2),
                                  kappa=kappa, cfg=cfg)
    m1, m2 = (f.l2_mass() for f in best.system.fields)
    tag = "coexist" if best.alive_count == 2 else "extinct"
    print(f"{eps:.4f}  {best.energy:9.4f}  {m1:.5f}  {m2:.5f}  {tag}")

print("\nwith kappa = 0 the species decouple and both always survive:")
fam = scaled_family(logistic(), 2, (0.7,))
best, _ = minimize_multistart(mask, fam, lam, coupling=coupling_quartic(2),
                              kappa=0.0, cfg=cfg)
print(f"eps=0.70 kappa=0: alive {best.alive_count}/2, energy {best.energy:.4f}")
