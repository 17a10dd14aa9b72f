"""Projected gradient descent, partition descent, and continuation.

The free minimizer iterates u <- clip(u - step * grad, [0, beta_i]) with
Armijo backtracking on the total energy, so accepted steps never increase
the energy and every iterate sits in the box [0, beta_i] (the species
caps double as a priori sup bounds).  The partition solver alternates one
such sweep per species on its own single-species energy with a hard
segregation projection (largest density keeps the node, ties go to the
lowest index), so its output has pairwise disjoint supports by
construction.  Continuation re-minimizes along an increasing competition
schedule, warm-starting each rate from the previous minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .energy import (DensityField, SpeciesSystem, _ops, energy_total,
                     rescaled_copy)
from .geometry import DomainMask
from .model import Coupling, ScaledFamily, F_eval, cutoff_phi, f_eval

STEP_UNDERFLOW = 1e-18


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 40000
    tol_energy: float = 1e-10
    tol_residual: float | None = None   # None -> 1e-6 * lam
    step0: float | None = None          # None -> h^2 / 8
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    step_growth: float = 1.1
    restarts: int = 8
    seed: int = 0
    coexist_eta: float | None = None    # None -> 1e-3 * beta_i * sqrt(|Omega|)
    stall_window: int = 20

    def __post_init__(self):
        if self.tol_energy <= 0:
            raise ValueError("tol_energy must be positive")
        if self.tol_residual is not None and self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo shrink factor must lie in (0, 1)")
        if self.coexist_eta is not None and self.coexist_eta <= 0:
            raise ValueError("coexist_eta must be positive")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class MinimizeResult:
    system: SpeciesSystem
    report: object
    iters: int
    converged: bool
    alive: list
    start_label: str
    residual: float
    energies: np.ndarray

    @property
    def energy(self) -> float:
        return self.report.total

    @property
    def alive_count(self) -> int:
        return int(sum(self.alive))


def alive_flags(sys: SpeciesSystem, cfg: SolverConfig) -> list:
    """Species with L2 mass above the liveness threshold."""
    betas = sys.fam.betas
    root_measure = np.sqrt(sys.mask.measure)
    out = []
    for i, f in enumerate(sys.fields):
        eta = cfg.coexist_eta if cfg.coexist_eta is not None \
            else 1e-3 * betas[i] * root_measure
        out.append(bool(f.l2_mass() > eta))
    return out


def _stack_energy(U, L, h2, fam, lam, coupling, kappa):
    e = 0.0
    for i in range(U.shape[0]):
        e += 0.5 * float(U[i] @ (L @ U[i]))
        e -= lam * h2 * float(np.sum(F_eval(fam, i + 1, U[i])))
    if kappa > 0 and coupling is not None and U.shape[0] > 1:
        e += kappa * h2 * float(np.sum(coupling.H(U)))
    return e


def _stack_gradient(U, L, h2, fam, lam, coupling, kappa):
    g = np.empty_like(U)
    for i in range(U.shape[0]):
        g[i] = (L @ U[i]) / h2 - lam * f_eval(fam, i + 1, U[i])
    if kappa > 0 and coupling is not None and U.shape[0] > 1:
        g += kappa * coupling.dH(U)
    return g


def _projected_residual(U, grad, betas):
    """Sup norm of the box-projected first-order optimality residual."""
    res = grad.copy()
    at_lo = U <= 0.0
    res[at_lo] = np.minimum(grad[at_lo], 0.0)
    at_hi = U >= betas[:, None]
    res[at_hi] = np.maximum(grad[at_hi], 0.0)
    return float(np.max(np.abs(res))) if res.size else 0.0


def minimize_free(sys0: SpeciesSystem, cfg: SolverConfig,
                  start_label: str = "custom") -> MinimizeResult:
    """Box-projected Armijo gradient descent on the full coupled energy."""
    mask = sys0.mask
    L = _ops(mask).L
    h2 = mask.h ** 2
    fam, lam, coupling, kappa = sys0.fam, sys0.lam, sys0.coupling, sys0.kappa
    betas = fam.betas
    tol_res = cfg.tol_residual if cfg.tol_residual is not None else 1e-6 * lam
    step = cfg.step0 if cfg.step0 is not None else h2 / 8.0

    U = np.clip(sys0.stacked(), 0.0, betas[:, None])
    E = _stack_energy(U, L, h2, fam, lam, coupling, kappa)
    if not np.isfinite(E):
        raise ValueError("non-finite energy at the initial iterate")

    step_cap = 1e9 * step
    energies = [E]
    stall = 0
    converged = False
    resnorm = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        grad = _stack_gradient(U, L, h2, fam, lam, coupling, kappa)
        resnorm = _projected_residual(U, grad, betas)

        accepted = False
        while step > STEP_UNDERFLOW:
            U_new = np.clip(U - step * grad, 0.0, betas[:, None])
            E_new = _stack_energy(U_new, L, h2, fam, lam, coupling, kappa)
            move = float(np.sum((U_new - U) ** 2))
            if E_new <= E - cfg.armijo_c * (h2 / step) * move:
                accepted = True
                break
            step *= cfg.armijo_shrink
        if not accepted:
            converged = resnorm <= tol_res
            break

        drop = E - E_new
        stall = stall + 1 if drop < cfg.tol_energy * max(1.0, abs(E)) else 0
        U, E = U_new, E_new
        energies.append(E)
        if move > 0:
            step = min(step * cfg.step_growth, step_cap)

        if stall >= cfg.stall_window and resnorm <= tol_res:
            converged = True
            break

    final = sys0.replace_values(U)
    report = energy_total(final)
    return MinimizeResult(system=final, report=report, iters=it,
                          converged=converged, alive=alive_flags(final, cfg),
                          start_label=start_label, residual=resnorm,
                          energies=np.array(energies))


def _distance_to_boundary(mask: DomainMask) -> np.ndarray:
    """Euclidean distance from each interior node to the nearest

    non-interior node, in length units."""
    dist = ndimage.distance_transform_edt(mask.interior)
    return dist[mask.interior] * mask.h


def _bump(mask: DomainMask, cap: float, lam: float) -> np.ndarray:
    d = _distance_to_boundary(mask)
    w = max(2.0 * mask.h, min(2.0 / np.sqrt(lam), float(d.max())))
    return cap * np.minimum(1.0, d / w)


def default_initializers(mask: DomainMask, fam: ScaledFamily, lam: float,
                         coupling: Coupling | None = None, kappa: float = 0.0,
                         cfg: SolverConfig | None = None, warn=None):
    """Structured and random starting systems for multistart minimization.

    Returns labeled systems: a first-species boundary-distance bump, one
    lone bump per further species, a seeded-copies start (shrunken copies
    of the bump with the first species cut off over their supports, so
    the fields are pairwise disjoint), a uniform half-cap start, and
    ``cfg.restarts`` nodewise-uniform random starts seeded ``seed + index``.
    When no placement fits a copy, the seeded start is dropped with a
    warning.
    """
    cfg = cfg or SolverConfig()
    warn = warn or (lambda msg: None)
    k = fam.k
    betas = fam.betas
    n = mask.n_interior

    def mk(stacked, label):
        fields = [DensityField(mask, stacked[i]) for i in range(k)]
        return label, SpeciesSystem(fields, fam, coupling, lam, kappa)

    starts = []
    bump = _bump(mask, betas[0], lam)
    single = np.zeros((k, n))
    single[0] = bump
    starts.append(mk(single, "single"))

    for i in range(1, k):
        lone = np.zeros((k, n))
        lone[i] = bump * (betas[i] / betas[0])
        starts.append(mk(lone, f"single-{i + 1}"))

    if k > 1:
        seeded = _seeded_copies(mask, fam, lam, bump, warn)
        if seeded is not None:
            starts.append(mk(seeded, "seeded"))

    uniform = np.repeat((betas / 2.0)[:, None], n, axis=1)
    starts.append(mk(uniform, "uniform"))

    for r in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + r)
        rand = rng.uniform(0.0, 1.0, size=(k, n)) * betas[:, None]
        starts.append(mk(rand, f"random-{r}"))
    return starts


def _seeded_copies(mask: DomainMask, fam: ScaledFamily, lam: float,
                   bump: np.ndarray, warn):
    """Disjointly supported copy start; None when no copy fits.

    On scale-anchored two-species domains (wedge vertex, disc center) the
    copy is the anchored shrunken bump supported in eps*Omega and the
    first species is ramped to zero over the covering strip or ball.
    Elsewhere copies sit on pairwise disjoint interior balls chosen by
    the distance transform.
    """
    k = fam.k
    eps_of = lambda i: 0.5 if fam.identical else fam.eps[i - 2]

    if k == 2 and mask.kind in ("wedge", "disc"):
        eps2 = eps_of(2)
        copy = rescaled_copy(DensityField(mask, bump), eps2, k, x0=(0.0, 0.0))
        u1 = bump.copy()
        if mask.kind == "wedge":
            u1 *= cutoff_phi(mask.xs / eps2)
        else:
            radius = mask.params["radius"]
            u1 *= cutoff_phi(np.hypot(mask.xs, mask.ys) / (eps2 * radius))
        u1[copy.values > 0] = 0.0  # interpolation fringe: keep supports disjoint
        return np.stack([u1, copy.values])

    dist = _distance_to_boundary(mask)
    order = np.argsort(-dist)
    circum = float(np.max(np.hypot(mask.xs, mask.ys)))
    u1 = bump.copy()
    out = np.zeros((k, mask.n_interior))
    placed = []

    for i in range(2, k + 1):
        eps_i = eps_of(i)
        rho = eps_i * circum
        spot = None
        for a in order:
            if dist[a] < rho + 2 * mask.h:
                continue
            x, y = mask.xs[a], mask.ys[a]
            if all(np.hypot(x - px, y - py) >= rho + prho + 4 * mask.h
                   for px, py, prho in placed):
                spot = (x, y)
                break
        if spot is None:
            warn(f"no interior ball of radius {rho:.3g} fits species {i}; "
                 "seeded start dropped")
            return None
        placed.append((spot[0], spot[1], rho))
        copy = rescaled_copy(DensityField(mask, bump), eps_i, k, x0=spot)
        out[i - 1] = copy.values
        r = np.hypot(mask.xs - spot[0], mask.ys - spot[1])
        u1 *= cutoff_phi(r / max(rho, mask.h))
        u1[copy.values > 0] = 0.0  # interpolation fringe: keep supports disjoint

    out[0] = u1
    return out


def minimize_multistart(mask: DomainMask, fam: ScaledFamily, lam: float,
                        coupling: Coupling | None = None, kappa: float = 0.0,
                        cfg: SolverConfig | None = None, starts=None,
                        partition: bool = False, warn=None):
    """Run every initializer; return (best result, all results).

    The best result attains the minimum final energy over all starts.
    """
    cfg = cfg or SolverConfig()
    if lam <= 0:
        raise ValueError("growth scale lam must be positive")
    if starts is None:
        starts = default_initializers(mask, fam, lam, coupling, kappa, cfg, warn)
    results = []
    for label, sys0 in starts:
        if partition:
            results.append(minimize_partition(sys0, cfg, start_label=label))
        else:
            results.append(minimize_free(sys0, cfg, start_label=label))
    best = min(results, key=lambda r: r.energy)
    return best, results


def segregation_projection(U: np.ndarray) -> np.ndarray:
    """At each node keep the largest density (ties: lowest species index)."""
    U = np.maximum(U, 0.0)
    winner = np.argmax(U, axis=0)
    out = np.zeros_like(U)
    cols = np.arange(U.shape[1])
    out[winner, cols] = U[winner, cols]
    return out


def minimize_partition(sys0: SpeciesSystem, cfg: SolverConfig,
                       start_label: str = "custom") -> MinimizeResult:
    """Alternating descent/projection scheme for the segregated problem.

    Ignores the competition rate: each species sweeps once on its own
    single-species energy, then the segregation projection restores
    pairwise disjoint supports.  Terminates on an energy stall of the
    segregated total.  The output is segregated nodewise by construction.
    """
    mask = sys0.mask
    L = _ops(mask).L
    h2 = mask.h ** 2
    fam, lam = sys0.fam, sys0.lam
    betas = fam.betas
    k = fam.k

    U = segregation_projection(np.clip(sys0.stacked(), 0.0, betas[:, None]))

    def species_energy(v, i):
        return (0.5 * float(v @ (L @ v))
                - lam * h2 * float(np.sum(F_eval(fam, i + 1, v))))

    E = sum(species_energy(U[i], i) for i in range(k))
    if not np.isfinite(E):
        raise ValueError("non-finite energy at the initial iterate")

    step0 = cfg.step0 if cfg.step0 is not None else h2 / 8.0
    steps = np.full(k, step0)
    step_cap = 1e9 * step0
    energies = [E]
    stall = 0
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        for i in range(k):
            v = U[i]
            g = (L @ v) / h2 - lam * f_eval(fam, i + 1, v)
            Ei = species_energy(v, i)
            while steps[i] > STEP_UNDERFLOW:
                v_new = np.clip(v - steps[i] * g, 0.0, betas[i])
                E_new = species_energy(v_new, i)
                move = float(np.sum((v_new - v) ** 2))
                if E_new <= Ei - cfg.armijo_c * (h2 / steps[i]) * move:
                    U[i] = v_new
                    if move > 0:
                        steps[i] = min(steps[i] * cfg.step_growth, step_cap)
                    break
                steps[i] *= cfg.armijo_shrink

        U = segregation_projection(U)
        E_new = sum(species_energy(U[i], i) for i in range(k))
        stall = stall + 1 if abs(E - E_new) < cfg.tol_energy * max(1.0, abs(E)) else 0
        E = E_new
        energies.append(E)
        if stall >= cfg.stall_window:
            converged = True
            break

    final = sys0.replace_values(U)
    report = energy_total(final)
    grad = _stack_gradient(U, L, h2, fam, lam, None, 0.0)
    return MinimizeResult(system=final, report=report, iters=it,
                          converged=converged, alive=alive_flags(final, cfg),
                          start_label=start_label,
                          residual=_projected_residual(U, grad, betas),
                          energies=np.array(energies))


def kappa_continuation(sys0: SpeciesSystem, kappa_schedule, cfg: SolverConfig):
    """Warm-started minimization along an increasing competition schedule.

    Returns one MinimizeResult per rate; the report's ``interaction``
    field is the raw overlap integral of the coupling at that rate.
    """
    schedule = [float(x) for x in kappa_schedule]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("kappa schedule must be strictly increasing")
    sys = sys0
    results = []
    for kap in schedule:
        sys = SpeciesSystem([f.copy() for f in sys.fields], sys.fam,
                            sys.coupling, sys.lam, kappa=kap)
        res = minimize_free(sys, cfg, start_label=f"kappa-{kap:g}")
        results.append(res)
        sys = res.system
    return results


def merged_system(sys: SpeciesSystem) -> SpeciesSystem:
    """Move the total density into species 1 and zero the others."""
    U = sys.stacked()
    merged = np.zeros_like(U)
    merged[0] = U.sum(axis=0)
    return sys.replace_values(merged)
