"""Thermophoretic engine: a particle in a triangle with two thermostatted
walls and a frictionless sliding belt of mass m1 under a constant force."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import BlockDraws, RngStream


class UndefinedEfficiencyError(Exception):
    """Efficiency requested before any heat flowed through the hot wall."""


@dataclass(frozen=True)
class EngineParams:
    T_h: float
    T_c: float
    alpha_h: float = 1.0
    alpha_c: float = 1.0
    m1: float = 1000.0   # belt mass
    m2: float = 1.0      # particle mass
    force: float = 0.0   # signed, positive pushes the belt from hot to cold
    belt_period: float = 1.0
    side: float = 1.0

    def __post_init__(self):
        if self.T_h <= 0 or self.T_c <= 0:
            raise ValueError("temperatures must be positive")
        for a in (self.alpha_h, self.alpha_c):
            if not (0.0 < a <= 1.0):
                raise ValueError("accommodation must be in (0, 1]")
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("masses must be positive")
        if self.belt_period <= 0 or self.side <= 0:
            raise ValueError("lengths must be positive")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.m2 / self.m1)


@dataclass
class EngineRecord:
    """Per-collision time series; cumulative heats, work, total energy."""
    t: np.ndarray
    x_w: np.ndarray
    w: np.ndarray
    q_h: np.ndarray
    q_c: np.ndarray
    work: np.ndarray
    energy: np.ndarray
    wall: np.ndarray
    e0: float
    aborted: bool = False
    resamples: int = 0

    def __len__(self):
        return len(self.t)

    def first_law_residual(self) -> np.ndarray:
        return (self.energy - self.e0
                - self.q_h - self.q_c - self.work)

    def check_first_law(self, tol: float = 1e-9) -> bool:
        bound = tol * max(1.0, abs(self.e0))
        return bool(np.abs(self.first_law_residual()).max() <= bound)


def belt_collision(v, w, m1, m2):
    """Particle-belt impact: normal component flips, horizontal components
    exchange as a 1D elastic collision between masses m2 and m1."""
    v = np.asarray(v, dtype=float)
    vx, vy = v
    nvx = ((m2 - m1) * vx + 2.0 * m1 * w) / (m1 + m2)
    nw = ((m1 - m2) * w + 2.0 * m2 * vx) / (m1 + m2)
    return np.array([nvx, -vy]), nw


def collision_matrix(gamma: float) -> np.ndarray:
    """The rescaled-coordinate impact map; an orthogonal involution."""
    g2 = gamma * gamma
    a = (1.0 - g2) / (1.0 + g2)
    b = 2.0 * gamma / (1.0 + g2)
    return np.array([[a, b, 0.0], [b, -a, 0.0], [0.0, 0.0, -1.0]])


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def engine_run(params: EngineParams, n_collisions: int, rng) -> EngineRecord:
    if n_collisions < 1:
        raise ValueError("need at least one collision")
    gen = _as_generator(rng)
    kp = {"T_h": params.T_h, "T_c": params.T_c,
          "alpha_h": params.alpha_h, "alpha_c": params.alpha_c,
          "m1": params.m1, "m2": params.m2,
          "force": params.force, "side": params.side}
    rec = kernels.engine_run(kp, n_collisions, BlockDraws(gen))
    out = EngineRecord(t=rec["t"], x_w=rec["x_w"], w=rec["w"],
                       q_h=rec["q_h"], q_c=rec["q_c"], work=rec["work"],
                       energy=rec["energy"], wall=rec["wall"], e0=rec["e0"],
                       aborted=rec["aborted"], resamples=rec["resamples"])
    if not out.aborted and not math.isfinite(out.energy[-1]):
        raise RuntimeError("non-finite engine state")
    return out


def efficiency(record: EngineRecord):
    """(epsilon, epsilon_bar, energy_ratio) at the end of the record."""
    if len(record) == 0:
        raise UndefinedEfficiencyError("empty record")
    q_h = record.q_h[-1]
    if q_h == 0.0:
        raise UndefinedEfficiencyError("no heat exchanged with the hot wall")
    eps = -record.work[-1] / q_h
    eps_bar = 1.0 + record.q_c[-1] / q_h
    ratio = (record.energy[-1] - record.e0) / q_h
    return eps, eps_bar, ratio


def drift_rate(record: EngineRecord, burn_in: int = 0) -> float:
    """Belt displacement per unit time after discarding burn_in collisions."""
    if len(record) <= burn_in + 1:
        raise ValueError("record too short for the requested burn-in")
    dt = record.t[-1] - record.t[burn_in]
    return (record.x_w[-1] - record.x_w[burn_in]) / dt


def run_ensemble(params: EngineParams, n_runs: int, n_collisions: int,
                 master_seed: int, burn_in: int = 0, workers: int = 1):
    """Independent engine runs on per-run RNG streams.

    Returns a dict of per-run arrays (drift, efficiency terms, final heats).
    Runs that fall into a boundary corner are truncated there; their partial
    record still contributes (the trajectory up to the stop is exact) and
    the `aborted` array reports which runs were cut short.  Runs too short
    for the burn-in carry NaN statistics.  Deterministic for fixed
    master_seed regardless of worker count.
    """
    args = [(params, n_collisions, master_seed, i, burn_in)
            for i in range(n_runs)]
    if workers > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            rows = pool.map(_ensemble_worker, args)
    else:
        rows = [_ensemble_worker(a) for a in args]
    rows = np.array(rows)
    return {
        "drift": rows[:, 0],
        "displacement": rows[:, 1],
        "eps": rows[:, 2],
        "eps_bar": rows[:, 3],
        "q_h": rows[:, 4],
        "q_c": rows[:, 5],
        "work": rows[:, 6],
        "aborted": rows[:, 7].astype(bool),
        "steps": rows[:, 8].astype(np.int64),
    }


def _ensemble_worker(arg):
    params, n_collisions, master_seed, index, burn_in = arg
    rec = engine_run(params, n_collisions, RngStream(master_seed, index))
    aborted = 1.0 if rec.aborted else 0.0
    if len(rec) <= burn_in + 1:
        return [np.nan] * 7 + [aborted, float(len(rec))]
    try:
        eps, eps_bar, _ = efficiency(rec)
    except UndefinedEfficiencyError:
        eps = eps_bar = np.nan
    return [drift_rate(rec, burn_in),
            rec.x_w[-1] - rec.x_w[burn_in],
            eps, eps_bar, rec.q_h[-1], rec.q_c[-1], rec.work[-1],
            aborted, float(len(rec))]
