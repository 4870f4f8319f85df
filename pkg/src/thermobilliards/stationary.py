"""Stationary speed-law mixtures: transition estimation, linear system, solve."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import Table
from .rng import BlockDraws, RngStream
from .sampling import moment_table, speed_ppf

ROW_SUM_TOL = 1e-12
FIXED_POINT_TOL = 1e-10


class IllPosedError(Exception):
    """(I - Q) is numerically singular (all accommodations near zero)."""


@dataclass
class TransitionMatrix:
    """Estimated Knudsen-walk transition probabilities between components."""
    p: np.ndarray
    counts: np.ndarray
    se: np.ndarray
    n_samples: int
    discarded: int = 0
    seed: int = None

    @property
    def n(self) -> int:
        return self.p.shape[0]


@dataclass
class SpeedLawMixture:
    """Restricted stationary speed laws: nu_i^s = sum_k c[i,k] * mu^s(T_k).

    Row masses sum to the normalized areas abar; conditional (per-collision)
    weights are c[i] / abar[i].
    """
    c: np.ndarray
    temperatures: np.ndarray
    abar: np.ndarray
    dimension: int

    def conditional_weights(self) -> np.ndarray:
        return self.c / self.abar[:, None]

    def sample_speeds(self, component: int, size: int,
                      rng: np.random.Generator, mass: float = 1.0) -> np.ndarray:
        """Exact draws from the stationary post-collision speed law."""
        weights = self.conditional_weights()[component]
        ks = rng.choice(len(weights), size=size, p=weights / weights.sum())
        u = rng.random(size)
        out = np.empty(size)
        for k in range(len(weights)):
            sel = ks == k
            if sel.any():
                out[sel] = speed_ppf(u[sel], self.temperatures[k],
                                     self.dimension, mass)
        return out

    def speed_cdf(self, component: int, r, mass: float = 1.0):
        from .sampling import speed_cdf
        weights = self.conditional_weights()[component]
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k, wk in enumerate(weights):
            out += wk * speed_cdf(r, self.temperatures[k], self.dimension, mass)
        return out


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def estimate_transition_matrix(table: Table, n_samples: int, rng,
                               min_samples: int = 10 ** 4) -> TransitionMatrix:
    """Estimate p_ij from i.i.d. draws of the billiard measure: start points
    uniform by boundary area, directions by the cosine law, one flight each."""
    if n_samples < min_samples:
        raise ValueError(f"need at least {min_samples} samples")
    if table.n_components < 2:
        raise ValueError("degenerate table: transitions need >= 2 components")
    gen = _as_generator(rng)
    counts, discarded = kernels.knudsen_transitions(
        table.as_arrays(), n_samples, BlockDraws(gen))
    counts = np.asarray(counts)
    row = counts.sum(axis=1)
    if (row == 0).any():
        raise IllPosedError("a component received no samples")
    p = counts / row[:, None]
    se = np.sqrt(p * (1.0 - p) / row[:, None])
    return TransitionMatrix(p=p, counts=counts, se=se,
                            n_samples=n_samples, discarded=discarded)


def exact_transition_matrix(table: Table) -> TransitionMatrix:
    """Closed-form p for tables with enough symmetry (plates, equilateral
    polygons): alternation / uniform off-diagonal."""
    n = table.n_components
    if table.kind == "two_plates":
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
    else:
        areas = np.array([c.area for c in table.components])
        if not np.allclose(areas, areas[0]):
            raise ValueError("no closed form for unequal component areas")
        p = (np.ones((n, n)) - np.eye(n)) / (n - 1)
    return TransitionMatrix(p=p, counts=np.zeros((n, n), dtype=np.int64),
                            se=np.zeros((n, n)), n_samples=0)


def build_linear_system(p, components):
    """Q_ij = (1 - alpha_i) p_ij A_i / A_j and the source weights
    pi_i = abar_i alpha_i (each attached to temperature T_i)."""
    pmat = p.p if isinstance(p, TransitionMatrix) else np.asarray(p, dtype=float)
    areas = np.array([c.area for c in components])
    alpha = np.array([c.accommodation for c in components])
    abar = areas / areas.sum()
    Q = (1.0 - alpha)[:, None] * pmat * (areas[:, None] / areas[None, :])
    pi_weights = abar * alpha
    temps = np.array([c.temperature for c in components])
    return Q, pi_weights, temps, abar


def solve_stationary(Q, pi_weights, temperatures, abar,
                     dimension: int) -> SpeedLawMixture:
    """Weights of nu^s = (I - Q)^{-1} pi, grouped by source temperature."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    eigs = np.linalg.eigvals(Q)
    if np.abs(eigs).max() >= 1.0 - 1e-12:
        raise IllPosedError("spectral radius of Q is not below 1")
    M = np.linalg.inv(np.eye(n) - Q)
    c = M * np.asarray(pi_weights)[None, :]
    resid = np.abs(c - (np.diag(pi_weights) + Q @ c)).max()
    if resid > FIXED_POINT_TOL * max(1.0, np.abs(c).max()):
        raise IllPosedError(f"fixed-point residual {resid:g} too large")
    mass_err = np.abs(c.sum(axis=1) - abar).max()
    if mass_err > 1e-9:
        raise IllPosedError(f"restricted-mass defect {mass_err:g}")
    return SpeedLawMixture(c=c, temperatures=np.asarray(temperatures, dtype=float),
                           abar=np.asarray(abar, dtype=float),
                           dimension=dimension)


def stationary_mixture(table: Table, p=None) -> SpeedLawMixture:
    """Convenience: linear system + solve for a table (exact p by default)."""
    if p is None:
        p = exact_transition_matrix(table)
    Q, pi_w, temps, abar = build_linear_system(p, table.components)
    return solve_stationary(Q, pi_w, temps, abar, table.dimension)


def component_energies(mix: SpeedLawMixture, p, components, mass: float = 1.0):
    """Per-collision conditional mean kinetic energies before and after
    reflection on each component."""
    pmat = p.p if isinstance(p, TransitionMatrix) else np.asarray(p, dtype=float)
    areas = np.array([c.area for c in components])
    mu_e = np.array([moment_table(t, mix.dimension, mass).mean_energy
                     for t in mix.temperatures])
    nu_plus_r = mix.c @ mu_e  # restricted (mass abar_i)
    nu_minus_r = (pmat * (areas[:, None] / areas[None, :])).T @ nu_plus_r
    return nu_plus_r / mix.abar, nu_minus_r / mix.abar
