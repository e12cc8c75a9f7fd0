import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualhelm.errors import DoubleRoot, ExponentOutOfRange, InvalidRegime, UnsupportedDimension
from dualhelm.regime import (
    ModelParameters,
    Regime,
    admissible_p_range,
    classify_regime,
    compute_roots,
    conjugate_exponent,
    format_window,
)


@pytest.mark.parametrize(
    "alpha, beta, expected",
    [(-1, 0, Regime.A), (-3, 7, Regime.A), (1, -3, Regime.B), (0, -1, Regime.C), (4, -4.5, Regime.B)],
)
def test_classify(alpha, beta, expected):
    assert classify_regime(alpha, beta, 3) is expected


@pytest.mark.parametrize("alpha, beta", [(1, -1), (1, 0), (1, 2), (0, 0), (0, 1), (2, -2)])
def test_classify_rejects(alpha, beta):
    with pytest.raises(InvalidRegime):
        classify_regime(alpha, beta, 3)


def test_boundary_is_double_root():
    with pytest.raises(DoubleRoot):
        classify_regime(1, -2, 3)
    with pytest.raises(DoubleRoot):
        compute_roots(1, -2)


@given(st.floats(1e-6, 1e6))
def test_every_boundary_point_is_double_root(alpha):
    with pytest.raises(DoubleRoot):
        classify_regime(alpha, -2.0 * math.sqrt(alpha))


def test_roots_examples():
    r = compute_roots(-1, 0)
    assert (r.a1, r.a2, r.disc) == (1.0, -1.0, 2.0)
    r = compute_roots(1, -3)
    assert r.a1 == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-15)
    assert r.a2 == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-15)
    r = compute_roots(0, -1)
    assert (r.a1, r.a2) == (1.0, 0.0)


def _admissible_pair(draw_kind, x, y):
    if draw_kind == 0:
        return -x, y  # A
    if draw_kind == 1:
        return x, -2 * math.sqrt(x) * (1 + y)  # B
    return 0.0, -x  # C


@settings(max_examples=300)
@given(st.integers(0, 2), st.floats(1e-3, 1e3), st.floats(1e-3, 10))
def test_root_invariants(kind, x, y):
    alpha, beta = _admissible_pair(kind, x, y)
    r = compute_roots(alpha, beta)
    scale = max(1.0, abs(beta), abs(alpha))
    assert abs(r.a1 + r.a2 + beta) <= 1e-12 * scale
    assert abs(r.a1 * r.a2 - alpha) <= 1e-12 * max(abs(alpha), r.a1 * abs(r.a2), 1e-300)
    assert r.a1 - r.a2 == pytest.approx(r.disc, rel=1e-12)
    reg = classify_regime(alpha, beta)
    if reg is Regime.A:
        assert r.a1 > 0 > r.a2
    elif reg is Regime.B:
        assert r.a1 > r.a2 > 0
    else:
        assert r.a1 > 0 and r.a2 == 0


@pytest.mark.parametrize(
    "N, regime, window",
    [(3, "A", (4.0, math.inf)), (5, "A", (3.0, 10.0)), (3, "C", (6.0, math.inf)), (2, "B", (6.0, math.inf))],
)
def test_p_windows(N, regime, window):
    assert admissible_p_range(N, regime) == pytest.approx(window)


def test_p_windows_ordered():
    for N in range(2, 13):
        for reg in "ABC":
            if reg == "C" and N < 3:
                continue
            lo, hi = admissible_p_range(N, reg)
            assert lo < hi


def test_dimension_floor():
    with pytest.raises(UnsupportedDimension):
        admissible_p_range(2, "C")
    with pytest.raises(UnsupportedDimension):
        admissible_p_range(1, "A")


def test_conjugate():
    assert conjugate_exponent(5) == 1.25
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(6) == pytest.approx(1.2)
    with pytest.raises(ValueError):
        conjugate_exponent(1)


def test_model_parameters_validation():
    m = ModelParameters(3, -1, 0, 5)
    assert m.regime is Regime.A and m.p_conj == 1.25
    assert m.symbol(2.0) == 3.0
    with pytest.raises(ExponentOutOfRange, match=r"\(4, ∞\) for N=3"):
        ModelParameters(3, -1, 0, 3)
    with pytest.raises(ExponentOutOfRange):
        ModelParameters(3, -1, 0, 4.0)  # open interval
    ModelParameters(3, -1, 0, 4.0 * (1 + 1e-6))
    with pytest.raises(ExponentOutOfRange):
        ModelParameters(5, -1, 0, 10.0)
    with pytest.raises(DoubleRoot):
        ModelParameters(3, 1, -2, 5)


def test_format_window():
    assert format_window((4.0, math.inf)) == "(4, ∞)"
    assert format_window((3.0, 10.0)) == "(3, 10)"


def test_roots_stable_for_tiny_alpha():
    # naive formula loses a2 entirely here
    r = compute_roots(-1e-12, 1.0)
    assert r.a1 * r.a2 == pytest.approx(-1e-12, rel=1e-12)
    assert np.isfinite(r.a1)
