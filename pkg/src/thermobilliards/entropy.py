"""Entropy production rate of the multi-temperature stationary chain."""

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import moment_table
from .stationary import (SpeedLawMixture, TransitionMatrix, build_linear_system,
                         component_energies, exact_transition_matrix,
                         solve_stationary)

FORM_AGREEMENT_TOL = 1e-10


@dataclass
class EntropyReport:
    """Entropy production per collision (kappa = 1) and its heat bookkeeping.

    heats[i] is the restricted per-collision mean energy gained by the
    particle at component i; pair_fluxes[i, j] decomposes heats[i] into
    exchange terms with component j (rows sum to heats).
    """
    e_p: float
    heats: np.ndarray
    pair_fluxes: np.ndarray
    temperatures: np.ndarray
    e_p_reference_constant: float = None
    potential: float = 0.0
    se: float = None

    @property
    def total(self) -> float:
        return self.e_p + self.potential


def _restricted_energies(pmat, areas, mix: SpeedLawMixture, mu_e):
    nu_plus = mix.c @ mu_e
    weight = pmat * (areas[:, None] / areas[None, :])
    nu_minus = weight.T @ nu_plus
    return nu_plus, nu_minus, weight


def _entropy_from_p(pmat, components, mix, mass=1.0, reference=False):
    areas = np.array([c.area for c in components])
    temps = mix.temperatures
    tables = [moment_table(t, mix.dimension, mass) for t in temps]
    if reference:
        mu_e = np.array([mt.reference_mean_energy for mt in tables])
    else:
        mu_e = np.array([mt.mean_energy for mt in tables])
    nu_plus, nu_minus, weight = _restricted_energies(pmat, areas, mix, mu_e)
    e_p = -float(((nu_plus - nu_minus) / temps).sum())
    # equivalent double-sum form over ordered component pairs; the two forms
    # coincide exactly only when the weight columns sum to 1 (true for the
    # exact billiard transition matrix, approximate for an estimated one)
    e_p_alt = -float(((nu_plus[None, :] - nu_plus[:, None]) / temps[None, :]
                      * weight).sum())
    col_defect = float(np.abs(weight.sum(axis=0) - 1.0).max())
    scale = max(1.0, abs(e_p))
    slack = col_defect * float(np.abs(nu_plus / temps).sum())
    if abs(e_p - e_p_alt) > FORM_AGREEMENT_TOL * scale + 2.0 * slack:
        raise AssertionError(
            f"entropy formula forms disagree: {e_p!r} vs {e_p_alt!r}")
    heats = nu_plus - nu_minus
    # pairwise split: energy at i attributed to exchange with j
    pair = weight.T * (nu_plus[:, None] - nu_plus[None, :])
    return e_p, heats, pair


def entropy_production(p, components, mix: SpeedLawMixture,
                       mass: float = 1.0, n_bootstrap: int = 0,
                       rng=None) -> EntropyReport:
    """Entropy production rate from a transition matrix and stationary
    mixture, with a delta-method standard error when p is estimated."""
    pmat = p.p if isinstance(p, TransitionMatrix) else np.asarray(p, dtype=float)
    if pmat.shape[0] != len(components) or mix.c.shape[0] != len(components):
        raise ValueError("inconsistent component counts")
    e_p, heats, pair = _entropy_from_p(pmat, components, mix, mass)
    e_p_ref, _, _ = _entropy_from_p(pmat, components, mix, mass, reference=True)
    report = EntropyReport(e_p=e_p, heats=heats, pair_fluxes=pair,
                           temperatures=mix.temperatures.copy(),
                           e_p_reference_constant=e_p_ref)
    if isinstance(p, TransitionMatrix) and p.n_samples > 0:
        report.se = _delta_method_se(p, components, mix.dimension, mass)
        if n_bootstrap > 0:
            report.se_bootstrap = _bootstrap_se(p, components, mix.dimension,
                                                mass, n_bootstrap, rng)
    return report


def _ep_of_p(pmat, components, dimension, mass):
    Q, pi_w, temps, abar = build_linear_system(pmat, components)
    mix = solve_stationary(Q, pi_w, temps, abar, dimension)
    e_p, _, _ = _entropy_from_p(pmat, components, mix, mass)
    return e_p


def _delta_method_se(p: TransitionMatrix, components, dimension, mass,
                     h: float = 1e-6) -> float:
    """Propagate the binomial sampling error of p through the entropy
    formula with a numerical gradient and per-row multinomial covariance."""
    n = p.n
    pmat = p.p
    row_n = p.counts.sum(axis=1).astype(float)
    grad = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            # perturb within the row simplex: shift one entry, renormalize
            # the row so the matrix stays stochastic (the multinomial
            # covariance below is supported on the simplex as well)
            pp = pmat.copy()
            pp[i, j] += h
            pp[i] /= pp[i].sum()
            pm = pmat.copy()
            pm[i, j] = max(pm[i, j] - h, 0.0)
            pm[i] /= pm[i].sum()
            grad[i, j] = (_ep_of_p(pp, components, dimension, mass)
                          - _ep_of_p(pm, components, dimension, mass)) / (2 * h)
    var = 0.0
    for i in range(n):
        g = grad[i]
        pi = pmat[i]
        cov = (np.diag(pi) - np.outer(pi, pi)) / max(row_n[i], 1.0)
        var += float(g @ cov @ g)
    return math.sqrt(max(var, 0.0))


def _bootstrap_se(p: TransitionMatrix, components, dimension, mass,
                  n_bootstrap, rng) -> float:
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    row_n = p.counts.sum(axis=1)
    vals = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        pb = np.empty_like(p.p)
        for i in range(p.n):
            pb[i] = gen.multinomial(row_n[i], p.p[i]) / row_n[i]
        vals[b] = _ep_of_p(pb, components, dimension, mass)
    return float(vals.std(ddof=1))


def two_plates_entropy(alpha1, alpha2, t1, t2, mass: float = 1.0) -> EntropyReport:
    """Closed form for the two-plate system (3D velocities)."""
    for a in (alpha1, alpha2):
        if not (0.0 < a <= 1.0):
            raise ValueError("accommodation must be in (0, 1]")
    if t1 <= 0 or t2 <= 0:
        raise ValueError("temperatures must be positive")
    c = 1.0 - (1.0 - alpha1) * (1.0 - alpha2)
    cond = alpha1 * alpha2 / (2.0 * c)
    mu1 = moment_table(t1, 3, mass).mean_energy
    mu2 = moment_table(t2, 3, mass).mean_energy
    cn = moment_table(t1, 3, mass).energy_coefficient
    q = cond * (mu1 - mu2)
    e_p = -cn * alpha1 * alpha2 / (2.0 * c) * (t1 - t2) * (1.0 / t1 - 1.0 / t2)
    check = q / t2 - q / t1
    if abs(e_p - check) > 1e-12 * max(1.0, abs(e_p)):
        raise AssertionError("closed form disagrees with Q/T form")
    heats = np.array([q, -q])
    pair = np.array([[0.0, q], [-q, 0.0]])
    ref1 = moment_table(t1, 3, mass).reference_mean_energy
    ref2 = moment_table(t2, 3, mass).reference_mean_energy
    qr = cond * (ref1 - ref2)
    e_p_ref = qr / t2 - qr / t1
    return EntropyReport(e_p=e_p, heats=heats, pair_fluxes=pair,
                         temperatures=np.array([t1, t2], dtype=float),
                         e_p_reference_constant=e_p_ref)


def three_temperature_heats(alphas, temps, mass: float = 1.0):
    """Equilateral-triangle heats Q_i, pairwise decomposition, and e_p.

    Evaluated through the exact stationary mixture with p_ij = (1-d_ij)/2,
    which is the closed form the per-pair published coefficients should
    reduce to (they only do at full accommodation; the mixture path is
    authoritative).
    """
    alphas = np.asarray(alphas, dtype=float)
    temps = np.asarray(temps, dtype=float)
    if alphas.shape != (3,) or temps.shape != (3,):
        raise ValueError("need 3 accommodations and 3 temperatures")
    pmat = (np.ones((3, 3)) - np.eye(3)) / 2.0

    class _C:
        def __init__(self, t, a):
            self.temperature = t
            self.accommodation = a
            self.area = 1.0

    comps = [_C(t, a) for t, a in zip(temps, alphas)]
    Q, pi_w, tvec, abar = build_linear_system(pmat, comps)
    mix = solve_stationary(Q, pi_w, tvec, abar, dimension=2)
    e_p, heats, pair = _entropy_from_p(pmat, comps, mix, mass)
    return heats, pair, e_p


def potential_term(p, components, phi, mass: float = 1.0) -> float:
    """Entropy contribution of a piecewise-constant boundary potential."""
    pmat = p.p if isinstance(p, TransitionMatrix) else np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not np.isfinite(phi).all():
        raise ValueError("potential values must be finite")
    areas = np.array([c.area for c in components])
    abar = areas / areas.sum()
    temps = np.array([c.temperature for c in components])
    dphi = phi[None, :] - phi[:, None]
    return -float((abar[:, None] * pmat * dphi / temps[:, None]).sum())
