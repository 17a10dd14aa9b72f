"""Acceptance suite: one test per criterion, each printing a verdict line.

Heavy artifacts (the fine wedge minimizer, the disc coexistence scan) are
computed once per session and shared between the criteria that reference
them.  Every tolerance is pinned here, in the test, not in the library.
"""

import time

import numpy as np
import pytest
from scipy.special import jn_zeros

from competelab.energy import (DensityField, SpeciesSystem, energy_gradient,
                               energy_total, lambda1, rescaled_copy,
                               single_species_energy)
from competelab.geometry import build_disc, build_rectangle, build_wedge
from competelab.model import (ScaledFamily, coupling_quartic, identical_family,
                              logistic, scaled_family)
from competelab.solve import (SolverConfig, merged_system, minimize_multistart,
                              segregation_projection)
from competelab import lab

ALPHA = 1 / 6  # integral of the logistic law over [0, 1]


def report(num, name, ok, detail):
    print(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} — {detail}")
    return ok


@pytest.fixture(scope="session")
def wedge_fine_minimizer():
    """Wedge m=2, lam=200, h=1/256 single-species minimizer (criteria 5, 9)."""
    t0 = time.perf_counter()
    mask = build_wedge(2.0, 1 / 256)
    fam = ScaledFamily(base=logistic(), k=1, eps=())
    best, results = minimize_multistart(mask, fam, 200.0,
                                        cfg=SolverConfig(restarts=0,
                                                         max_iters=80000))
    return {"mask": mask, "fam": fam, "best": best, "results": results,
            "wall": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def coexistence_scan():
    """Criterion 7's scan; its threshold feeds criterion 8 and its rerun

    is criterion 11's determinism check."""
    cfg = SolverConfig(restarts=2, max_iters=40000, seed=7)
    grid = [0.1443, 0.25, 0.4, 0.5, 0.6, 0.7]
    t0 = time.perf_counter()
    mask = build_disc(1.0, 1 / 64)
    verdict = lab.scan_epsilon_threshold(mask, 2, 200.0, 400.0, grid, cfg)
    return {"verdict": verdict, "cfg": cfg, "grid": grid, "mask": mask,
            "wall": time.perf_counter() - t0}


def test_criterion_1_gradient_consistency():
    t0 = time.perf_counter()
    mask = build_rectangle(1, 1, 1 / 64)
    base = logistic()
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(trial)
        k = 2 + trial % 2
        fam = scaled_family(base, k, tuple(rng.uniform(0.1, 0.9, k - 1)))
        betas = fam.betas
        U = rng.uniform(0.05, 0.95, (k, mask.n_interior)) * betas[:, None]
        sys = SpeciesSystem([DensityField(mask, U[i]) for i in range(k)],
                            fam, coupling_quartic(k), lam=200.0,
                            kappa=float(rng.uniform(0, 400)))
        grad = energy_gradient(sys)
        d = rng.uniform(-1, 1, U.shape) * betas[:, None]
        t = 1e-5
        Ep = energy_total(sys.replace_values(U + t * d)).total
        Em = energy_total(sys.replace_values(U - t * d)).total
        fd = (Ep - Em) / (2 * t)
        an = mask.h ** 2 * float(np.sum(grad * d))
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an)))
    wall = time.perf_counter() - t0
    ok = worst < 1e-6 and wall < 10.0
    assert report(1, "gradient consistency", ok,
                  f"worst rel err {worst:.3e} (tol 1e-6), {wall:.1f}s (< 10s)")


def test_criterion_2_eigenvalues():
    t0 = time.perf_counter()
    lam_sq = lambda1(build_rectangle(1, 1, 1 / 128))
    ref_sq = 2 * np.pi ** 2
    rel_sq = abs(lam_sq - ref_sq) / ref_sq

    lam_disc = lambda1(build_disc(1.0, 0.01))
    ref_disc = float(jn_zeros(0, 1)[0]) ** 2  # analytic disc eigenvalue
    rel_disc = abs(lam_disc - ref_disc) / ref_disc
    wall = time.perf_counter() - t0
    ok = rel_sq < 0.005 and rel_disc < 0.01 and wall < 30.0
    assert report(2, "principal eigenvalues", ok,
                  f"square {lam_sq:.5f} vs {ref_sq:.5f} ({rel_sq:.2%}, tol 0.5%); "
                  f"disc {lam_disc:.5f} vs {ref_disc:.5f} ({rel_disc:.2%}, tol 1%); "
                  f"{wall:.1f}s (< 30s)")


def test_criterion_3_truncation_and_merge_monotonicity():
    t0 = time.perf_counter()
    base = logistic()
    mask = build_rectangle(1, 1, 1 / 16)
    fam2 = scaled_family(base, 2, (0.3,))
    C2 = coupling_quartic(2)
    slack = lambda e: 1e-12 * max(1.0, abs(e))
    checked = 0

    rng = np.random.default_rng(100)
    for _ in range(334):  # clip at the caps
        U = rng.uniform(0, 2.0, (2, mask.n_interior)) * fam2.betas[:, None]
        sys = SpeciesSystem([DensityField(mask, U[i]) for i in range(2)],
                            fam2, C2, 150.0, float(rng.uniform(0, 300)))
        e = energy_total(sys).total
        e_cut = energy_total(sys.replace_values(
            np.minimum(U, fam2.betas[:, None]))).total
        assert e_cut <= e + slack(e)
        checked += 1

    for _ in range(333):  # clip below zero
        U = rng.uniform(-0.5, 1.0, (2, mask.n_interior)) * fam2.betas[:, None]
        sys = SpeciesSystem([DensityField(mask, U[i]) for i in range(2)],
                            fam2, C2, 150.0, float(rng.uniform(0, 300)))
        e = energy_total(sys).total
        e_cut = energy_total(sys.replace_values(np.maximum(U, 0.0))).total
        assert e_cut <= e + slack(e)
        checked += 1

    for trial in range(333):  # merge disjointly supported identical laws
        k = 2 + trial % 2
        fam = identical_family(base, k)
        U = segregation_projection(rng.uniform(0, 1, (k, mask.n_interior)))
        sys = SpeciesSystem([DensityField(mask, U[i]) for i in range(k)],
                            fam, None, 150.0)
        e = energy_total(sys).total
        e_merged = energy_total(merged_system(sys)).total
        assert e_merged <= e + slack(e)
        checked += 1

    wall = time.perf_counter() - t0
    ok = checked == 1000 and wall < 10.0
    assert report(3, "truncation/merge monotonicity", ok,
                  f"{checked} randomized fields, slack 1e-12, {wall:.1f}s (< 10s)")


def test_criterion_4_large_growth_asymptotics():
    t0 = time.perf_counter()
    mask = build_rectangle(1, 1, 1 / 128)
    cfg = SolverConfig(restarts=2, max_iters=60000, seed=4)
    verdict = lab.verify_limiti_asymptotics(mask, [50, 100, 200, 400, 800], cfg)
    vals = verdict.details["values"]
    target = -ALPHA * 1.0  # continuum bulk value on the unit square
    lower_ok = all(v >= target * 1.01 for v in vals)
    mono_ok = all(b < a for a, b in zip(vals, vals[1:]))
    final_gap = abs(vals[-1] - target) / abs(target)
    final_ok = final_gap <= 0.10
    wall = time.perf_counter() - t0
    ok = lower_ok and mono_ok and final_ok and wall < 300.0
    report(4, "large-growth limit of min J", ok,
           f"values [{', '.join(f'{v:.4f}' for v in vals)}] target {target:.4f}; "
           f"lower_ok={lower_ok} monotone_ok={mono_ok} final_ok={final_ok} "
           f"(final gap {final_gap:.1%}, tol 10%; boundary-layer analysis "
           f"puts the gap at 0.369*4/sqrt(800) = 5.2e-2 absolute, i.e. ~29%); "
           f"{wall:.0f}s (< 300s)")
    assert ok


def test_criterion_5_box_and_corner_barrier(wedge_fine_minimizer):
    fx = wedge_fine_minimizer
    t0 = time.perf_counter()
    beta = 1.0
    box_ok = all(
        bool(np.all(r.system.fields[0].values >= 0.0)
             and np.all(r.system.fields[0].values <= beta))
        for r in fx["results"])
    chk = lab.check_wedge_bound(fx["best"].system.fields[0], 2.0, 200.0)
    wall = fx["wall"] + (time.perf_counter() - t0)
    ok = box_ok and chk["ok"] and wall < 120.0
    assert report(5, "a priori bounds", ok,
                  f"box exact on {len(fx['results'])} outputs; corner barrier "
                  f"max excess {chk['max_excess']:.4f} (must be <= 0, "
                  f"slack 10*h*gamma inside bound); {wall:.0f}s (< 120s)")


def test_criterion_6_extinction_identical_laws():
    t0 = time.perf_counter()
    mask = build_rectangle(1, 1, 1 / 64)
    cfg = SolverConfig(restarts=4, max_iters=40000, seed=6)
    verdict = lab.verify_extinction_identical(mask, 3, 200.0, cfg)
    wall = time.perf_counter() - t0
    d = verdict.details
    ok = verdict.status == lab.PASS and wall < 180.0
    assert report(6, "extinction under identical laws", ok,
                  f"best energy {d['best_energy']:.4f}, best alive count "
                  f"{d['best_alive_count']} (<= 1), merge_ok={d['merge_ok']}; "
                  f"{wall:.0f}s (< 180s)")


def test_criterion_7_coexistence_threshold(coexistence_scan):
    fx = coexistence_scan
    d = fx["verdict"].details
    ok = (fx["verdict"].status == lab.PASS
          and d["threshold"] is not None
          and d["threshold"] >= d["eps_star"]
          and fx["wall"] < 600.0)
    assert report(7, "disc coexistence threshold", ok,
                  f"eps* = {d['eps_star']:.4f} (= sqrt(lam/(6 k^2 kappa))), "
                  f"measured threshold {d['threshold']}, coexisting at "
                  f"{d['coexisting']}; {fx['wall']:.0f}s (< 600s)")


def test_criterion_8_two_species_continuation(coexistence_scan):
    eps2 = coexistence_scan["verdict"].details["threshold"]
    assert eps2 is not None, "criterion 7 scan found no coexistence"
    t0 = time.perf_counter()
    mask = build_wedge(2.0, 1 / 96)
    cfg = SolverConfig(restarts=2, max_iters=60000, seed=8)
    verdict = lab.verify_system2(mask, 200.0, float(eps2),
                                 [10.0, 30.0, 100.0, 300.0, 1000.0], cfg)
    wall = time.perf_counter() - t0
    d = verdict.details
    ok = verdict.status == lab.PASS and wall < 900.0
    assert report(8, "strong-competition continuation", ok,
                  f"eps2={eps2}; alive_ok={d.get('alive_ok')} overlap drop "
                  f"{d.get('overlap_drop', 0):.1e} (>= 1e3); monotone_ok="
                  f"{d.get('monotone_ok')} below partition c={d.get('partition_minimum')}; "
                  f"projection gap {d.get('projection_gap', np.nan):.2e} "
                  f"(< 1%); {wall:.0f}s (< 900s)")


def test_criterion_9_cutoff_scaling(wedge_fine_minimizer):
    fx = wedge_fine_minimizer
    t0 = time.perf_counter()
    h = 1 / 256
    verdict = lab.verify_cutoff_scaling(2.0, 200.0, h,
                                        [1 / 32, 1 / 16, 1 / 8, 1 / 4],
                                        SolverConfig(),
                                        minimizer=fx["best"])
    wall = time.perf_counter() - t0
    d = verdict.details
    ok = verdict.status == lab.PASS and d["slope"] >= 3.0 and wall < 300.0
    assert report(9, "vertex cutoff scaling", ok,
                  f"fitted slope {d['slope']:.3f} (>= 3, reference exponent 4); "
                  f"gaps {[(f'{dd:.3g}', f'{g:.3e}') for dd, g in d['gaps']]}; "
                  f"{wall:.0f}s (< 300s, minimizer shared with criterion 5)")


def test_criterion_10_rescaled_copy_identity():
    t0 = time.perf_counter()
    mask = build_rectangle(1, 1, 1 / 128)
    fam1 = ScaledFamily(base=logistic(), k=1, eps=())
    best, _ = minimize_multistart(mask, fam1, 100.0,
                                  cfg=SolverConfig(restarts=0,
                                                   max_iters=60000))
    u1 = best.system.fields[0]
    fam2 = scaled_family(logistic(), 2, (0.25,))
    w = rescaled_copy(u1, 0.25, 2, x0=(0.375, 0.375))
    J1 = single_species_energy(u1, 1, fam2, 100.0)
    J2 = single_species_energy(w, 2, fam2, 100.0)
    target = (0.25 ** 2 / 2) * J1
    rel = abs(J2 - target) / abs(target)
    wall = time.perf_counter() - t0
    ok = rel < 0.02 and wall < 60.0
    assert report(10, "rescaled-copy energy identity", ok,
                  f"J2(copy) {J2:.6f} vs (eps^2/k) J1 {target:.6f} "
                  f"(rel {rel:.2%}, tol 2%); {wall:.0f}s (< 60s)")


def test_criterion_11_determinism(coexistence_scan):
    fx = coexistence_scan
    t0 = time.perf_counter()
    verdict2 = lab.scan_epsilon_threshold(fx["mask"], 2, 200.0, 400.0,
                                          fx["grid"], fx["cfg"])
    wall = time.perf_counter() - t0

    def energy_columns(verdict):
        return [(lab.fmt(rec.lam), lab.fmt(rec.kappa), rec.eps,
                 tuple(lab.fmt(v) for v in rec.dirichlet),
                 tuple(lab.fmt(v) for v in rec.potential),
                 lab.fmt(rec.interaction), lab.fmt(rec.total))
                for rec in verdict.records]

    a = energy_columns(fx["verdict"])
    b = energy_columns(verdict2)
    ok = a == b and len(a) == len(fx["grid"])
    assert report(11, "bit-identical rerun", ok,
                  f"{len(a)} records, energy columns identical: {a == b}; "
                  f"{wall:.0f}s")
