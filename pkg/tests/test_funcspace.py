import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supcon.funcspace import (GridSpec, SampledFunction, corpus_entry,
                              corpus_names, documented_inconsistencies,
                              eval_corpus, interpolate, load_csv, sample,
                              save_csv)


# ---------------------------------------------------------------------------
# corpus values
# ---------------------------------------------------------------------------

def test_arctan_det_at_identity():
    assert eval_corpus("arctan_det", np.eye(2)) == math.atan(1.0)
    assert eval_corpus("arctan_det", np.eye(2)) == pytest.approx(math.pi / 4)


def test_clamp_branches():
    assert eval_corpus("clamp1d", np.array([[0.5]])) == 0.5
    assert eval_corpus("clamp1d", np.array([[-3.0]])) == 0.0
    assert eval_corpus("clamp1d", np.array([[7.0]])) == 1.0


def test_W_sup_small_norm_zero_det():
    # |xi| <= 1 keeps the shelf at zero and arctan(0) = 0
    assert eval_corpus("W_sup", np.diag([1.0, 0.0])) == 0.0
    assert eval_corpus("W_sup", 0.5 * np.diag([1.0, 0.0])) == 0.0
    # shelf ramp plus determinant term
    assert eval_corpus("W_sup", np.diag([2.0, 0.0])) == 1.0
    assert eval_corpus("W_sup", np.eye(2)) == pytest.approx(
        max(math.sqrt(2) - 1.0, math.atan(1.0)))


def test_chi_det_closed_vs_open_threshold():
    assert eval_corpus("chi_det", np.eye(2)) == 1.0
    assert eval_corpus("chi_det_open", np.eye(2)) == 0.0
    assert eval_corpus("chi_det", 2.0 * np.eye(2)) == 1.0
    assert eval_corpus("chi_det", np.diag([2.0, 0.0])) == 0.0


def test_exampleD_profile():
    f = corpus_entry("exampleD_scalar")
    assert f.value(np.array([[0.5]])) == 0.5
    assert f.value(np.array([[-1.5]])) == 1.0
    assert f.value(np.array([[3.0]])) == 1.5
    g = corpus_entry("exampleD")
    assert g.value(np.zeros((2, 2))) == 0.0
    # Frobenius norm 3 lands on the coercive branch: value |xi|/2
    assert g.value(np.diag([3.0, 0.0])) == 1.5


def test_one_minus_chi_pair_atoms():
    f = corpus_entry("one_minus_chi_pair")
    xi0, eta0, mid = f.special_points
    assert f.value(xi0) == 0.0
    assert f.value(eta0) == 0.0
    assert f.value(mid) == 1.0


def test_half_space_chi():
    f = corpus_entry("half_space_chi")
    e = np.zeros((2, 2)); e[0, 0] = 1.0
    assert f.value(e) == 1.0
    assert f.value(0.999 * e) == 0.0


def test_unknown_name_and_dims_mismatch():
    with pytest.raises(KeyError):
        eval_corpus("no_such_function", np.eye(2))
    with pytest.raises(ValueError):
        corpus_entry("arctan_det")(np.zeros((1, 1)))


def test_documented_flags_consistent_across_corpus():
    for name in corpus_names():
        assert documented_inconsistencies(corpus_entry(name)) == []


# ---------------------------------------------------------------------------
# grid + sampling
# ---------------------------------------------------------------------------

def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((1, 1), 1.0, 4)  # even
    with pytest.raises(ValueError):
        GridSpec((1, 1), -1.0, 5)
    with pytest.raises(ValueError):
        GridSpec((0, 1), 1.0, 5)


def test_memory_cap(monkeypatch):
    monkeypatch.setenv("SUPCON_MEM_CAP_MB", "0.001")
    with pytest.raises(MemoryError):
        GridSpec((2, 2), 1.0, 9)


def test_sample_abs_three_points():
    f = sample(corpus_entry("abs"), GridSpec((1, 1), 1.0, 3))
    assert f.values.tolist() == [1.0, 0.0, 1.0]


def test_sample_clamp_five_points():
    f = sample(corpus_entry("clamp1d"), GridSpec((1, 1), 2.0, 5))
    assert f.values.tolist() == [0.0, 0.0, 0.0, 1.0, 1.0]


def test_sample_chi_det_identity_node():
    grid = GridSpec((2, 2), 2.0, 5)
    f = sample(corpus_entry("chi_det"), grid)
    ax = grid.axis().tolist()
    i1 = ax.index(1.0)
    i0 = ax.index(0.0)
    assert f.values[(i1, i0, i0, i1)] == 1.0


def test_sample_round_trip_with_eval():
    entry = corpus_entry("arctan_det")
    grid = GridSpec((2, 2), 2.0, 5)
    f = sample(entry, grid)
    nodes = grid.nodes()
    for idx in (0, 100, grid.node_count - 1):
        assert interpolate(f, nodes[idx]) == entry.value(nodes[idx])


def test_interpolate_midpoint_linear():
    f = SampledFunction(GridSpec((1, 1), 1.0, 3), np.array([0.0, 0.0, 1.0]))
    assert interpolate(f, np.array([[0.5]])) == 0.5


def test_interpolate_outside_modes():
    g = GridSpec((1, 1), 1.0, 3)
    f = SampledFunction(g, np.array([1.0, 0.0, 1.0]), "plus-infinity")
    assert interpolate(f, np.array([[2.0]])) == math.inf
    f2 = SampledFunction(g, np.array([1.0, 0.0, 1.0]), "clamp-to-boundary")
    assert interpolate(f2, np.array([[2.0]])) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(-1.0, 1.0))
def test_interpolation_is_monotone_between_nodes(seed, x):
    rng = np.random.default_rng(seed)
    g = GridSpec((1, 1), 1.0, 5)
    vals = rng.normal(size=5)
    f = SampledFunction(g, vals)
    v = interpolate(f, np.array([[x]]))
    ax = g.axis()
    i = min(int(np.floor((x + 1.0) / g.spacing)), 3)
    lo, hi = sorted((vals[i], vals[i + 1]))
    assert lo - 1e-12 <= v <= hi + 1e-12


def test_interpolation_monotone_2d():
    rng = np.random.default_rng(5)
    g = GridSpec((1, 2), 1.0, 3)
    f = SampledFunction(g, rng.normal(size=9))
    q = np.array([[0.3, -0.2]])
    v = interpolate(f, q)
    assert f.values.min() - 1e-12 <= v <= f.values.max() + 1e-12


def test_values_must_be_finite():
    with pytest.raises(ValueError):
        SampledFunction(GridSpec((1, 1), 1.0, 3), np.array([0.0, math.inf, 0.0]))


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    entry = corpus_entry("double_well_1d")
    f = sample(entry, GridSpec((1, 1), 3.0, 21))
    path = tmp_path / "dw.csv"
    save_csv(f, path)
    assert (tmp_path / "dw.json").exists()
    g = load_csv(path)
    assert np.array_equal(g.values, f.values)
    assert g.grid == f.grid
    assert g.outside_mode == f.outside_mode


def test_csv_header_layout(tmp_path):
    f = sample(corpus_entry("arctan_det"), GridSpec((2, 2), 1.0, 3))
    path = tmp_path / "a.csv"
    save_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == "axis_0,axis_1,axis_2,axis_3,value"


def test_csv_sidecar_contents(tmp_path):
    f = sample(corpus_entry("clamp1d"), GridSpec((1, 1), 2.0, 5))
    save_csv(f, tmp_path / "c.csv")
    meta = json.loads((tmp_path / "c.json").read_text())
    assert meta == {"dims": [1, 1], "radius": 2.0, "points_per_axis": 5,
                    "outside_mode": "clamp-to-boundary"}
