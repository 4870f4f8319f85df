"""Driving the random billiard Markov chain and summarizing trajectories."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .geometry import (CornerHitError, PhasePoint, Table, inward_normal,
                       local_frame, specular, trace)
from .rng import BlockDraws, RngStream
from .sampling import ReflectionLaw, sample_knudsen_cosine, speed_ppf

BURN_IN_DEFAULT = 1000


class InvalidSegmentError(Exception):
    """Consecutive phase points do not satisfy the chain constraint."""


@dataclass(frozen=True)
class CollisionRecord:
    step: int
    component: int
    pre_energy: float
    post_energy: float
    branch: str  # "diffuse" | "specular"


@dataclass
class TrajectorySummary:
    """Mergeable per-component accumulators over the collisions of one or
    more trajectories (burn-in already discarded)."""
    n_components: int
    steps: int = 0
    burn_in: int = 0
    visits: np.ndarray = None
    sum_post: np.ndarray = None
    sum_post_sq: np.ndarray = None
    sum_pre: np.ndarray = None
    sum_pre_sq: np.ndarray = None
    transitions: np.ndarray = None
    aborted_trajectories: int = 0
    resamples: int = 0

    def __post_init__(self):
        n = self.n_components
        if self.visits is None:
            self.visits = np.zeros(n, dtype=np.int64)
            self.sum_post = np.zeros(n)
            self.sum_post_sq = np.zeros(n)
            self.sum_pre = np.zeros(n)
            self.sum_pre_sq = np.zeros(n)
            self.transitions = np.zeros((n, n), dtype=np.int64)

    def mean_post_energy(self):
        return self.sum_post / np.maximum(self.visits, 1)

    def mean_pre_energy(self):
        return self.sum_pre / np.maximum(self.visits, 1)

    def var_post_energy(self):
        m = self.mean_post_energy()
        return self.sum_post_sq / np.maximum(self.visits, 1) - m * m

    def var_pre_energy(self):
        m = self.mean_pre_energy()
        return self.sum_pre_sq / np.maximum(self.visits, 1) - m * m

    def merge(self, other: "TrajectorySummary") -> "TrajectorySummary":
        if other.n_components != self.n_components:
            raise ValueError("component count mismatch")
        out = TrajectorySummary(self.n_components)
        out.steps = self.steps + other.steps
        out.burn_in = self.burn_in + other.burn_in
        out.visits = self.visits + other.visits
        out.sum_post = self.sum_post + other.sum_post
        out.sum_post_sq = self.sum_post_sq + other.sum_post_sq
        out.sum_pre = self.sum_pre + other.sum_pre
        out.sum_pre_sq = self.sum_pre_sq + other.sum_pre_sq
        out.transitions = self.transitions + other.transitions
        out.aborted_trajectories = (self.aborted_trajectories
                                    + other.aborted_trajectories)
        out.resamples = self.resamples + other.resamples
        return out


def _effective_arrays(table: Table, law: ReflectionLaw) -> dict:
    tbl = table.as_arrays()
    if law.kind == "specular":
        tbl = dict(tbl)
        tbl["accommodation"] = np.zeros_like(tbl["accommodation"])
    return tbl


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def step(table: Table, law: ReflectionLaw, x: PhasePoint, rng, mass: float = 1.0):
    """One chain step: free flight, then one reflection at the landing wall."""
    gen = _as_generator(rng)
    y = trace(table, x)
    normal = inward_normal(table, y.component, y.position)
    comp = table.components[y.component]
    v_in = np.asarray(y.velocity, dtype=float)
    if law.kind == "specular" or gen.random() >= comp.accommodation:
        branch = "specular"
        v_out = specular(v_in, normal)
    else:
        branch = "diffuse"
        frame = local_frame(table, y.component, y.position)
        sigma = math.sqrt(comp.temperature / mass)
        dim = frame.shape[0]
        tang = gen.standard_normal(dim - 1) * sigma
        w = sigma * math.sqrt(-2.0 * math.log1p(-gen.random()))
        v_out = np.concatenate([tang, [w]]) @ frame
    pre_e = 0.5 * mass * float(np.dot(v_in, v_in))
    post_e = 0.5 * mass * float(np.dot(v_out, v_out))
    nxt = PhasePoint(y.component, y.position, v_out)
    return nxt, CollisionRecord(0, y.component, pre_e, post_e, branch)


def run(table: Table, law: ReflectionLaw, x0: PhasePoint, n_steps: int,
        burn_in: int = BURN_IN_DEFAULT, rng=None, mass: float = 1.0,
        return_records: bool = False):
    """Run the chain for n_steps collisions and summarize after burn-in."""
    if not (n_steps > burn_in >= 0):
        raise ValueError("need n_steps > burn_in >= 0")
    gen = _as_generator(rng)
    tbl = _effective_arrays(table, law)
    rec = kernels.run_chain(tbl, x0.component, x0.position,
                            np.asarray(x0.velocity, dtype=float),
                            n_steps, BlockDraws(gen), mass)
    summary = summarize(rec, table.n_components, burn_in)
    if return_records:
        return summary, rec
    return summary


def summarize(rec: dict, n_components: int, burn_in: int) -> TrajectorySummary:
    s = TrajectorySummary(n_components)
    comp = rec["comp"][burn_in:]
    post = rec["post_e"][burn_in:]
    pre = rec["pre_e"][burn_in:]
    s.steps = len(comp)
    s.burn_in = min(burn_in, rec["steps_done"])
    s.visits = np.bincount(comp, minlength=n_components).astype(np.int64)
    s.sum_post = np.bincount(comp, weights=post, minlength=n_components)
    s.sum_post_sq = np.bincount(comp, weights=post * post, minlength=n_components)
    s.sum_pre = np.bincount(comp, weights=pre, minlength=n_components)
    s.sum_pre_sq = np.bincount(comp, weights=pre * pre, minlength=n_components)
    if len(comp) > 1:
        pair = comp[:-1] * n_components + comp[1:]
        s.transitions = np.bincount(
            pair, minlength=n_components ** 2
        ).reshape(n_components, n_components).astype(np.int64)
    s.aborted_trajectories = 1 if rec["aborted"] else 0
    s.resamples = rec["resamples"]
    return s


def sample_initial(table: Table, temperature: float, rng,
                   mass: float = 1.0) -> PhasePoint:
    """Initial state: boundary point by area, cosine-law direction, speed
    from the Maxwellian speed law at the given temperature."""
    gen = _as_generator(rng)
    areas = np.array([c.area for c in table.components])
    r = gen.random() * areas.sum()
    comp = int(np.searchsorted(np.cumsum(areas), r))
    comp = min(comp, table.n_components - 1)
    pos = r - np.concatenate([[0.0], np.cumsum(areas)])[comp]
    pos = float(np.clip(pos, 1e-6 * areas[comp], (1 - 1e-6) * areas[comp]))
    dim = table.dimension
    u_local = sample_knudsen_cosine(dim, gen)
    speed = float(speed_ppf(gen.random(), temperature, dim, mass))
    frame = local_frame(table, comp, pos)
    v = speed * (u_local @ frame)
    return PhasePoint(comp, pos, v)


def proper_time_reversal(segment, table: Table):
    """Flip a chain segment: apply J after the free flight to every point and
    reverse the order.  The result is again a valid chain segment."""
    if len(segment) == 0:
        raise InvalidSegmentError("empty segment")
    diam = table.diameter()
    traced = []
    for i, x in enumerate(segment):
        y = trace(table, x)
        traced.append(y)
        if i + 1 < len(segment):
            nxt = segment[i + 1]
            if y.component != nxt.component or \
                    abs(y.position - nxt.position) > 1e-9 * diam:
                raise InvalidSegmentError(
                    f"segment breaks the chain constraint at index {i}")
    out = []
    for y in reversed(traced):
        out.append(PhasePoint(y.component, y.position,
                              -np.asarray(y.velocity, dtype=float)))
    return out
