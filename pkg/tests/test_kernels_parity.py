"""The compiled and pure-Python kernels must produce bit-identical output."""

import numpy as np
import pytest

from thermobilliards import (disc_union, equilateral_triangle, inward_normal,
                             two_plates, unit_square)
from thermobilliards.kernels import get_backend
from thermobilliards.rng import BlockDraws, RngStream

try:
    CORE = get_backend("cython")[0]
except ImportError:
    CORE = None

PURE = get_backend("pure")[0]

pytestmark = pytest.mark.skipif(CORE is None,
                                reason="compiled kernels not built")


def _tables():
    return {
        "two_plates": two_plates((2.0, 1.0), (0.7, 0.9)),
        "square": unit_square((1.0, 2.0, 3.0, 4.0), (0.8, 0.6, 1.0, 0.5)),
        "discs": disc_union(1.0, 0.6, (1.0, 3.0), (0.9, 0.7)),
        "triangle": equilateral_triangle((1.0, 2.0, 3.0), (1.0, 0.5, 0.8)),
    }


def _initial(table, tbl):
    if tbl["kind"] == 0:
        return 0, 0.0, np.array([0.1, 0.2, 1.3])
    comp, pos = 0, 0.4 * tbl["area"][0]
    n = inward_normal(table, comp, pos)
    return comp, pos, 1.7 * n + 0.4 * np.array([n[1], -n[0]])


@pytest.mark.parametrize("name", sorted(_tables()))
def test_run_chain_parity(name):
    table = _tables()[name]
    tbl = table.as_arrays()
    comp0, pos0, vel0 = _initial(table, tbl)
    out = {}
    for mod in (PURE, CORE):
        draws = BlockDraws(RngStream(42, 0).generator())
        out[mod] = mod.run_chain(tbl, comp0, pos0, vel0, 20000, draws)
    a, b = out[PURE], out[CORE]
    assert a["steps_done"] == b["steps_done"] > 0
    assert a["aborted"] == b["aborted"]
    assert a["resamples"] == b["resamples"]
    for key in ("comp", "branch", "pre_e", "post_e", "speed"):
        assert np.array_equal(a[key], b[key]), key


@pytest.mark.parametrize("name", sorted(_tables()))
def test_knudsen_parity(name):
    tbl = _tables()[name].as_arrays()
    out = {}
    for mod in (PURE, CORE):
        draws = BlockDraws(RngStream(7, 1).generator())
        out[mod] = mod.knudsen_transitions(tbl, 30000, draws)
    (ca, da), (cb, db) = out[PURE], out[CORE]
    assert np.array_equal(np.asarray(ca), np.asarray(cb))
    assert da == db


@pytest.mark.parametrize("force", [0.0, -5.0, 2.0])
def test_engine_parity(force):
    params = {"T_h": 50.0, "T_c": 1.0, "alpha_h": 0.9, "alpha_c": 1.0,
              "m1": 1000.0, "m2": 1.0, "force": force, "side": 1.0}
    out = {}
    for mod in (PURE, CORE):
        draws = BlockDraws(RngStream(3, 2).generator())
        out[mod] = mod.engine_run(params, 10000, draws)
    a, b = out[PURE], out[CORE]
    assert a["e0"] == b["e0"]
    assert a["steps_done"] == b["steps_done"] > 0
    assert a["aborted"] == b["aborted"]
    for key in ("t", "x_w", "w", "q_h", "q_c", "work", "energy", "wall"):
        assert np.array_equal(a[key], b[key]), key


def test_block_draw_state_sync():
    # kernels leave the BlockDraws cursor where a pure consumer expects it
    tbl = _tables()["two_plates"].as_arrays()
    draws_a = BlockDraws(RngStream(9, 0).generator())
    draws_b = BlockDraws(RngStream(9, 0).generator())
    PURE.run_chain(tbl, 0, 0.0, np.array([0.1, 0.2, 1.3]), 500, draws_a)
    CORE.run_chain(tbl, 0, 0.0, np.array([0.1, 0.2, 1.3]), 500, draws_b)
    for _ in range(100):
        assert draws_a.uniform() == draws_b.uniform()
        assert draws_a.normal() == draws_b.normal()
