import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tatess.range_comparison import (
    NEG_INF,
    FilteredComplex,
    RangeBound,
    check_map,
    identity_witness,
    iterate_bounds,
    propagate,
    simulate_comparison,
    vanishing_line,
    zero_target_witness,
)
from tatess.stabilizer_presets import HeightContext, preset_spectral_sequence


def test_propagate_examples():
    d = 7
    assert propagate(RangeBound(2, d, d + 1)) == RangeBound(3, d, d + 2)
    assert propagate(RangeBound(5, 0, 0)) == RangeBound(6, 0, 5)


def test_iso_below_onto_rejected():
    with pytest.raises(ValueError):
        RangeBound(2, 3, 2)


@given(st.integers(-20, 20), st.integers(2, 40))
def test_iterated_bound_closed_form(d, r):
    trace = iterate_bounds(RangeBound(2, d, d + 1), r)
    assert [b.page for b in trace] == list(range(2, r + 1))
    assert (trace[-1].onto_from, trace[-1].iso_from) == (d, d + r - 1)


@given(st.integers(2, 30), st.integers(-10, 10), st.integers(0, 10), st.integers(0, 5))
def test_propagate_monotone(r, m0, gap, extra):
    """Weaker input bounds never give stronger output bounds."""
    a = propagate(RangeBound(r, m0, m0 + gap))
    b = propagate(RangeBound(r, m0 + extra, m0 + gap + extra))
    assert a.onto_from <= b.onto_from and a.iso_from <= b.iso_from
    assert a.iso_from >= a.onto_from


def test_neg_inf_is_stable():
    b = propagate(RangeBound(2, NEG_INF, NEG_INF))
    assert b.onto_from == NEG_INF and b.iso_from == NEG_INF


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("group", ["f", "n", "g"])
def test_vanishing_line_formula(p, group):
    ctx = HeightContext(p)
    vl = vanishing_line(p, group)
    n = p - 1
    assert vl.page == 2 * n * n + 2
    assert vl.line == 2 * n * n + ctx.vcd[group] + 1
    assert vl.line - vanishing_line(p, "f").line == ctx.vcd[group]
    assert list(vl.trace) == iterate_bounds(RangeBound(2, vl.vcd, vl.vcd + 1), vl.page)


def test_vanishing_line_examples():
    assert (vanishing_line(3, "G").page, vanishing_line(3, "G").line) == (10, 13)
    assert vanishing_line(3, "f").line == 9
    assert (vanishing_line(5, "n").page, vanishing_line(5, "n").line) == (34, 37)
    assert vanishing_line(5, "f").line == 33


def test_vanishing_line_to_dict():
    d = vanishing_line(3, "n").to_dict()
    assert d["line"] == 11 and d["trace"][0] == {"page": 2, "onto_from": 2, "iso_from": 3}
    assert len(d["trace"]) == 9


def test_vanishing_line_rejects_cp():
    with pytest.raises(ValueError):
        vanishing_line(3, "cp")


def test_f_line_matches_computed_collapse():
    """Above s = 2n^2 the polynomial F model vanishes on E_{2n^2+2}."""
    ss = preset_spectral_sequence(3, "f", inverted=False)
    r = ss.last_page
    line = vanishing_line(3, "f").line
    dims = ss.interior_dimensions(r)
    assert dims == {} or all(s < line for (s, _), d in dims.items() if d)


def test_identity_witness():
    w = identity_witness()
    assert w.ok and math.isinf(w.start.onto_from) and math.isinf(w.start.iso_from)


def test_zero_target_witness():
    w = zero_target_witness()
    assert w.ok and w.start.onto_from == NEG_INF


def test_measured_start_for_zero_map():
    """The zero map out of a complex with surviving classes is onto
    everywhere and injective only above them."""
    cx = FilteredComplex(3, np.array([0, 1]), np.array([0, 0]), np.zeros((2, 2), dtype=np.int64))
    empty = FilteredComplex(3, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros((0, 0), dtype=np.int64))
    w = check_map(0, cx, empty, np.zeros((0, 2), dtype=np.int64), 2, 1)
    assert w.ok
    assert w.start.iso_from == 2 and w.start.onto_from == NEG_INF


@pytest.mark.parametrize("seed", range(0, 200, 7))
def test_simulated_maps_respect_bounds(seed):
    w = simulate_comparison(seed)
    assert w.ok, w.violations
    assert w.pages_checked >= 3


def test_simulation_is_seeded():
    a, b = simulate_comparison(11), simulate_comparison(11)
    assert (a.prime, a.start, a.pages_checked) == (b.prime, b.start, b.pages_checked)
