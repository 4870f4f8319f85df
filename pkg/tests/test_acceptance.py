"""End-to-end acceptance suite.

Each test exercises one headline guarantee of the library — closed-form
agreement, distributional laws, structural invariants of estimated
matrices, engine conservation laws and efficiency identities — at a fixed
seed and a pinned tolerance, and prints a one-line PASS/FAIL verdict
directly to the terminal.

Statistical checks use fixed seeds that were verified to pass with margin;
the tolerances (3-4 standard errors, KS significance 0.001) leave room for
reruns with other seeds.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from thermobilliards import (PhasePoint, ReflectionLaw, RngStream, disc_union,
                             equilateral_triangle, run, sample_initial, step,
                             two_plates)
from thermobilliards.engine import (EngineParams, efficiency, engine_run,
                                    run_ensemble)
from thermobilliards.entropy import entropy_production, two_plates_entropy
from thermobilliards.sampling import speed_cdf
from thermobilliards.stationary import (estimate_transition_matrix,
                                        stationary_mixture)

Z95 = 1.959963984540054


def _report(capfd, name, ok, detail=""):
    with capfd.disabled():
        print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


def _mc_entropy(table, temperatures, n_traj, n_keep, burn_in, seed_base):
    """Per-trajectory entropy production estimates from wall heat tallies."""
    temps = np.asarray(temperatures, dtype=float)
    vals = np.empty(n_traj)
    for j in range(n_traj):
        x0 = sample_initial(table, float(temps.mean()),
                            RngStream(seed_base, 2 * j).generator())
        s = run(table, ReflectionLaw(), x0, n_keep + burn_in, burn_in=burn_in,
                rng=RngStream(seed_base, 2 * j + 1))
        heat = s.sum_post - s.sum_pre
        vals[j] = -np.sum(heat / temps) / s.steps
    return vals


def test_two_plate_entropy_closed_form_vs_monte_carlo(capfd):
    # 100 independent trajectories, 1e4 kept collisions each (1e6 total),
    # at (alpha1, alpha2, T1, T2) = (0.5, 0.8, 2, 1); the sample mean must
    # sit within 3 standard errors of the closed form 2/9.
    t0 = time.time()
    tab = two_plates((2.0, 1.0), (0.5, 0.8))
    vals = _mc_entropy(tab, (2.0, 1.0), 100, 10000, 1000, seed_base=301)
    closed = two_plates_entropy(0.5, 0.8, 2.0, 1.0).e_p
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    z = (vals.mean() - closed) / se
    elapsed = time.time() - t0
    ok = abs(z) < 3.0 and elapsed < 60.0
    _report(capfd, "two-plate closed form vs Monte Carlo", ok,
            f"e_p={vals.mean():.5f} closed={closed:.5f} z={z:+.2f} "
            f"({elapsed:.1f}s)")


def test_triangle_spatial_kernel_is_one_half(capfd):
    # the wall-to-wall transition probabilities of the diffuse spatial walk
    # on an equilateral triangle are 1/2 off the diagonal, 0 on it
    tri = equilateral_triangle((1.0,) * 3, (1.0,) * 3)
    tm = estimate_transition_matrix(tri, 1_000_000, RngStream(801, 0))
    row_n = tm.counts.sum(axis=1)[:, None].astype(float)
    se = np.sqrt(tm.p * (1.0 - tm.p) / row_n)
    off = ~np.eye(3, dtype=bool)
    zmax = float(np.abs((tm.p[off] - 0.5) / se[off]).max())
    ok = zmax < 4.0 and float(tm.p[np.eye(3, dtype=bool)].max()) == 0.0
    _report(capfd, "triangle transition matrix p_ij = 1/2", ok,
            f"max|z|={zmax:.2f}")


def test_stationary_speed_mixture_matches_chain(capfd):
    # triangle at alpha = 0.7, T = (1, 2, 3): per-wall post-collision speeds
    # from a long chain against draws from the predicted stationary mixture
    # (two-sample KS at significance 0.001, 1e5 samples per wall).  Chain
    # samples are thinned by 10 to damp the serial dependence that specular
    # reflections introduce.
    thin, need, seed = 10, 100_000, 212
    tri = equilateral_triangle((1.0, 2.0, 3.0), (0.7, 0.7, 0.7))
    mix = stationary_mixture(tri)
    x0 = sample_initial(tri, 2.0, RngStream(seed, 0).generator())
    _, rec = run(tri, ReflectionLaw(), x0, 3_600_000, burn_in=2000,
                 rng=RngStream(seed, 1), return_records=True)
    comp = rec["comp"][2000:]
    speed = rec["speed"][2000:]
    pvals = []
    for i in range(3):
        sample = speed[comp == i][::thin][:need]
        assert len(sample) == need
        ref = mix.sample_speeds(i, need, RngStream(seed, 10 + i).generator())
        pvals.append(stats.ks_2samp(sample, ref).pvalue)
    ok = min(pvals) >= 0.001
    _report(capfd, "stationary speed law per wall (two-sample KS)", ok,
            "p=" + "/".join(f"{p:.3f}" for p in pvals))


def test_equal_temperature_equilibrium(capfd):
    # with every wall at T0 the chain equilibrates to the Maxwellian at T0
    # and the entropy production estimate is zero within its 95% CI
    T0 = 1.5
    tri = equilateral_triangle((T0,) * 3, (1.0,) * 3)

    # speed law over the whole boundary
    x0 = sample_initial(tri, T0, RngStream(501, 0).generator())
    _, rec = run(tri, ReflectionLaw(), x0, 200_000, burn_in=1000,
                 rng=RngStream(501, 1), return_records=True)
    p_speed = stats.kstest(rec["speed"][1000:],
                           lambda r: speed_cdf(r, T0, 2)).pvalue

    # velocity components at the bottom wall (inward normal +y): tangential
    # is a centered Gaussian, normal is flux-weighted (Rayleigh)
    gen = RngStream(501, 2).generator()
    x = sample_initial(tri, T0, gen)
    tangential, normal = [], []
    for _ in range(30_000):
        x, _ = step(tri, ReflectionLaw(), x, gen)
        if x.component == 0:
            tangential.append(x.velocity[0])
            normal.append(x.velocity[1])
    sigma = math.sqrt(T0)
    p_tan = stats.kstest(np.array(tangential), "norm",
                         args=(0.0, sigma)).pvalue
    p_nor = stats.kstest(np.array(normal), "rayleigh",
                         args=(0.0, sigma)).pvalue

    # entropy production across 20 independent trajectories
    vals = _mc_entropy(tri, (T0,) * 3, 20, 19000, 1000, seed_base=503)
    z = vals.mean() / (vals.std(ddof=1) / math.sqrt(len(vals)))

    ok = min(p_speed, p_tan, p_nor) >= 0.001 and abs(z) <= Z95
    _report(capfd, "equal-temperature Maxwellian equilibrium", ok,
            f"KS p speed/tan/normal={p_speed:.3f}/{p_tan:.3f}/{p_nor:.3f} "
            f"e_p z={z:+.2f}")


def test_entropy_nonnegative_on_random_configurations(capfd):
    # 1e3 random configurations, half two-plate and half triangle, all with
    # exact transition matrices: e_p > 0 whenever temperatures differ and
    # exactly 0 when they are equal; small-gradient scaling is quadratic
    rng = np.random.default_rng(901)
    worst_pos = np.inf
    worst_eq = 0.0
    for k in range(500):
        a = rng.uniform(0.05, 1.0, 2)
        t = rng.uniform(0.2, 8.0, 2)
        worst_pos = min(worst_pos, two_plates_entropy(a[0], a[1], *t).e_p)
        worst_eq = max(worst_eq,
                       abs(two_plates_entropy(a[0], a[1], t[0], t[0]).e_p))
    from thermobilliards.stationary import exact_transition_matrix
    for k in range(500):
        a = rng.uniform(0.05, 1.0, 3)
        t = rng.uniform(0.2, 8.0, 3)
        tri = equilateral_triangle(t, a)
        rep = entropy_production(exact_transition_matrix(tri),
                                 tri.components, stationary_mixture(tri))
        worst_pos = min(worst_pos, rep.e_p)
        tri_eq = equilateral_triangle((t[0],) * 3, a)
        rep_eq = entropy_production(exact_transition_matrix(tri_eq),
                                    tri_eq.components,
                                    stationary_mixture(tri_eq))
        worst_eq = max(worst_eq, abs(rep_eq.e_p))
    d = 1e-3
    r = (two_plates_entropy(0.6, 0.9, 2.0, 2.0 + 2 * d).e_p
         / two_plates_entropy(0.6, 0.9, 2.0, 2.0 + d).e_p)
    ok = worst_pos > 0.0 and worst_eq < 1e-12 and abs(r - 4.0) < 0.04
    _report(capfd, "e_p >= 0, zero iff equal T, quadratic scaling", ok,
            f"min e_p={worst_pos:.3g} max|e_p(eq)|={worst_eq:.1e} "
            f"ratio={r:.4f}")


def test_disc_union_transition_matrix_structure(capfd):
    # estimated spatial kernel on the two-disc union: rows sum to one
    # exactly, the area-weighted column sums are one, and detailed balance
    # with respect to boundary area holds, at waist ratios 0.1/0.5/0.9
    worst_row, worst_col, worst_sym = 0.0, 0.0, 0.0
    for ratio in (0.1, 0.5, 0.9):
        tab = disc_union(1.0, ratio, (1.0, 1.0), (1.0, 1.0))
        tm = estimate_transition_matrix(tab, 200_000,
                                        RngStream(802, int(ratio * 10)))
        A = np.array([c.area for c in tab.components])
        row_n = tm.counts.sum(axis=1)[:, None].astype(float)
        var = tm.p * (1.0 - tm.p) / row_n
        worst_row = max(worst_row, float(np.abs(tm.p.sum(axis=1) - 1).max()))
        w = A[:, None] / A[None, :]
        col = (tm.p * w).sum(axis=0)
        col_se = np.sqrt((var * w * w).sum(axis=0))
        worst_col = max(worst_col, float(np.abs((col - 1) / col_se).max()))
        flux = A[:, None] * tm.p
        flux_var = A[:, None] ** 2 * var
        sym_z = abs(flux[0, 1] - flux[1, 0]) / math.sqrt(flux_var[0, 1]
                                                         + flux_var[1, 0])
        worst_sym = max(worst_sym, float(sym_z))
    ok = worst_row < 1e-12 and worst_col < 4.0 and worst_sym < 4.0
    _report(capfd, "disc-union transition matrix structure", ok,
            f"rows={worst_row:.1e} col z={worst_col:.2f} "
            f"sym z={worst_sym:.2f}")


def test_ratio_sweep_data_product(capfd):
    # 40 waist ratios x temperature gaps 0..4: the zero-gap curve vanishes,
    # e_p grows pointwise with the gap, and the sweep is fast; the location
    # of the steepest rise is reported, not asserted
    t0 = time.time()
    ratios = np.linspace(0.025, 0.975, 40)
    curves = {dt: np.empty(len(ratios)) for dt in range(5)}
    for k, ratio in enumerate(ratios):
        tm = None
        for dt in range(5):
            tab = disc_union(1.0, ratio, (1.0 + dt, 1.0), (0.7, 0.7))
            if tm is None:
                tm = estimate_transition_matrix(tab, 100_000,
                                                RngStream(601, k))
            rep = entropy_production(tm, tab.components,
                                     stationary_mixture(tab, tm))
            curves[dt][k] = rep.e_p
    elapsed = time.time() - t0
    zero_gap = float(np.abs(curves[0]).max())
    monotone = all(np.all(curves[d + 1] >= curves[d]) for d in range(4))
    slope = np.diff(curves[4]) / np.diff(ratios)
    knee = float(ratios[np.argmax(np.abs(slope))])
    ok = zero_gap < 1e-12 and monotone and elapsed < 600.0
    _report(capfd, "ratio sweep: zero at equal T, grows with gap", ok,
            f"|e_p(dT=0)|<={zero_gap:.1e} monotone={monotone} "
            f"steepest rise near ratio {knee:.2f} ({elapsed:.1f}s)")


def test_engine_first_law_every_collision(capfd):
    # energy bookkeeping E - E0 = Q_h + Q_c + W must hold at every recorded
    # collision to 1e-9 * max(1, |E0|), across forces and seeds
    worst = 0.0
    for fi, force in enumerate((0.0, -5.0, 3.0)):
        for j in range(3):
            par = EngineParams(T_h=50.0, T_c=1.0, force=force)
            rec = engine_run(par, 20_000, RngStream(810 + j, fi))
            resid = np.abs(rec.first_law_residual()).max()
            worst = max(worst, float(resid / max(1.0, abs(rec.e0))))
    ok = worst < 1e-9
    _report(capfd, "engine first law at every collision", ok,
            f"max scaled residual={worst:.2e}")


def test_engine_drift_direction(capfd):
    # mean belt drift over 1e3 runs of 1e4 collisions: positive when the
    # hot wall is on the left, flips sign when the temperatures swap, and
    # vanishes within its CI at equal temperatures
    results = {}
    for name, th, tc, seed in (("hot-left", 50.0, 1.0, 401),
                               ("swapped", 1.0, 50.0, 402),
                               ("equal", 10.0, 10.0, 403)):
        ens = run_ensemble(EngineParams(T_h=th, T_c=tc), 1000, 10_000,
                           master_seed=seed, burn_in=500, workers=4)
        d = ens["drift"][np.isfinite(ens["drift"])]
        results[name] = (d.mean(), d.std(ddof=1) / math.sqrt(len(d)))
    m1, s1 = results["hot-left"]
    m2, s2 = results["swapped"]
    m3, s3 = results["equal"]
    ok = (m1 - Z95 * s1 > 0.0) and (m2 + Z95 * s2 < 0.0) and abs(m3) <= Z95 * s3
    _report(capfd, "engine drift direction follows temperatures", ok,
            f"hot-left={m1:+.3f}+-{s1:.3f} swapped={m2:+.3f}+-{s2:.3f} "
            f"equal={m3:+.4f}+-{s3:.4f}")


def test_engine_efficiency_identities_and_force_sweep(capfd):
    # per-collision identity eps_bar - eps = (E - E0)/Q_h, eps = 0 at zero
    # force, and a 200-run x 1000-collision force sweep in which the mean
    # thermodynamic efficiency is positive on an interior force interval
    t0 = time.time()
    par = EngineParams(T_h=50.0, T_c=1.0, force=-4.0)
    rec = engine_run(par, 20_000, RngStream(700, 0))
    m = rec.q_h != 0.0
    resid = np.abs((1.0 + rec.q_c[m] / rec.q_h[m])
                   - (-rec.work[m] / rec.q_h[m])
                   - (rec.energy[m] - rec.e0) / rec.q_h[m]).max()

    rec0 = engine_run(EngineParams(T_h=50.0, T_c=1.0, force=0.0),
                      10_000, RngStream(700, 1))
    eps0, _, _ = efficiency(rec0)

    forces = (0.0, -2.0, -4.0, -6.0, -8.0)
    lower = {}
    for force in forces:
        ens = run_ensemble(EngineParams(T_h=50.0, T_c=1.0, force=force),
                           200, 1000, master_seed=701, burn_in=0, workers=4)
        eb = ens["eps_bar"][np.isfinite(ens["eps_bar"])]
        lower[force] = eb.mean() - Z95 * eb.std(ddof=1) / math.sqrt(len(eb))
    elapsed = time.time() - t0
    interior_positive = any(lower[f] > 0.0 for f in forces[1:-1])
    ok = (resid < 1e-9 and eps0 == 0.0 and interior_positive
          and elapsed < 900.0)
    _report(capfd, "engine efficiency identity and force sweep", ok,
            f"identity resid={resid:.1e} eps(F=0)={eps0} "
            f"CI lower bounds={[f'{lower[f]:+.4f}' for f in forces]} "
            f"({elapsed:.1f}s)")


@pytest.mark.skipif(os.environ.get("THERMOBILLIARDS_FULL_SWEEP") != "1",
                    reason="long-running mode; set THERMOBILLIARDS_FULL_SWEEP=1")
def test_engine_full_force_sweep(capfd):
    # full-resolution mode: 5000 runs x 1000 collisions per force value;
    # several hours of compute, kept opt-in
    forces = np.linspace(0.0, -10.0, 11)
    rows = []
    for i, force in enumerate(forces):
        ens = run_ensemble(EngineParams(T_h=50.0, T_c=1.0, force=float(force)),
                           5000, 1000, master_seed=9000 + i, burn_in=0,
                           workers=os.cpu_count() or 1)
        eb = ens["eps_bar"][np.isfinite(ens["eps_bar"])]
        rows.append((float(force), eb.mean(),
                     eb.std(ddof=1) / math.sqrt(len(eb))))
    interior_positive = any(m - Z95 * s > 0.0 for _, m, s in rows[1:-1])
    _report(capfd, "engine full force sweep", interior_positive,
            " ".join(f"F={f}:{m:+.4f}" for f, m, s in rows))
