"""Closed-form image polygon, its two branches and the rigidity classifier."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdatlas import (
    AngleFunction,
    SymmetricFamily,
    classify_shi_tam,
    closed_form_alpha,
    equivalent,
    normalize,
    other_branch,
    predict,
    solve_asymptotic_system,
)
from qdatlas.errors import UnsupportedM


def family_from_nu(m: int, nu: float) -> SymmetricFamily:
    return SymmetricFamily(m, 0.0, 2.0 * (m + 1) * nu / math.pi)


# ---------------------------------------------------------------------------
# predict


def test_predict_regular_square():
    pred = predict(SymmetricFamily(1, 0.0, 0.0))
    assert abs(pred.alpha - math.pi / 2) < 1e-15
    assert pred.nu == 0.0
    angles = pred.polygon.angles
    assert np.allclose(angles, (0, math.pi / 2, math.pi, 3 * math.pi / 2),
                       rtol=0, atol=1e-12)


def test_predict_known_angle():
    f = family_from_nu(1, 0.5)
    pred = predict(f)
    assert abs(pred.nu - 0.5) < 1e-15
    assert abs(pred.alpha - 2.0 * math.atan(math.exp(-1.0))) < 1e-12


def test_predict_large_b_pairs_up():
    pred = predict(SymmetricFamily(2, 0.0, 20.0))
    assert 0.0 < pred.alpha < 1e-8
    assert len(pred.polygon.vertices) == 6
    # the closed form itself survives arbitrarily large nu
    nus = [math.pi * b / 6.0 for b in (20.0, 100.0, 1000.0)]
    vals = [closed_form_alpha(2, nu) for nu in nus]
    assert all(v >= 0.0 for v in vals)
    assert vals[0] > vals[1] >= vals[2]
    assert vals[0] < 1e-8


def test_predict_a_independent_and_sign_symmetric():
    base = predict(SymmetricFamily(2, 0.0, 1.5))
    for a in (-10.0, 10.0):
        assert predict(SymmetricFamily(2, a, 1.5)).alpha == base.alpha
    assert predict(SymmetricFamily(2, 0.0, -1.5)).alpha == base.alpha


def test_predict_nu_crosscheck():
    f = SymmetricFamily(2, 0.0, 1.0)
    pred = predict(f, nu=f.nu + 1e-10)
    assert pred.alpha == closed_form_alpha(2, f.nu)
    with pytest.raises(ValueError):
        predict(f, nu=f.nu + 1e-3)


def test_predict_vertex_layout():
    f = family_from_nu(2, 0.3)
    pred = predict(f)
    verts = pred.polygon.vertices
    assert len(verts) == 6
    w = f.omega
    for k in range(3):
        assert abs(verts[2 * k] - w ** k) < 1e-12
        assert abs(verts[2 * k + 1] - w ** k * complex(math.cos(pred.alpha),
                                                       math.sin(pred.alpha))) < 1e-12


# ---------------------------------------------------------------------------
# asymptotic system


def test_system_nu_zero():
    alpha, a_val = solve_asymptotic_system(1, 0.0)
    assert abs(alpha - math.pi / 2) < 1e-12
    assert abs(a_val - 0.5) < 1e-12
    alpha, a_val = solve_asymptotic_system(2, 0.0)
    assert abs(alpha - math.pi / 3) < 1e-12
    assert abs(a_val - 0.25) < 1e-12


def test_system_satisfies_both_equations():
    for m, nu in ((1, 0.5), (3, 1.2), (6, 0.05)):
        alpha, a_val = solve_asymptotic_system(m, nu)
        theta = math.pi / (m + 1)
        assert abs(math.sqrt(a_val) * math.exp(-2 * nu) - math.sin(alpha / 2)) < 1e-12
        assert abs(math.sqrt(a_val) - math.sin(theta - alpha / 2)) < 1e-12


def test_system_matches_closed_form():
    alpha, _ = solve_asymptotic_system(1, 0.5)
    assert abs(alpha - 2.0 * math.atan(math.exp(-1.0))) < 1e-10


def test_system_validates_inputs():
    with pytest.raises(ValueError):
        solve_asymptotic_system(0, 0.1)
    with pytest.raises(ValueError):
        solve_asymptotic_system(1, -0.1)


# ---------------------------------------------------------------------------
# other branch


def test_branch_nu_zero_coincide():
    pred = predict(SymmetricFamily(2, 0.0, 0.0))
    alt = other_branch(pred)
    assert abs(alt.alpha - pred.alpha) < 1e-15
    assert abs(pred.alpha - math.pi / 3) < 1e-15


def test_branch_angles_sum():
    pred = predict(family_from_nu(1, 0.5))
    alt = other_branch(pred)
    assert abs(pred.alpha + alt.alpha - math.pi) < 1e-12
    assert alt.alpha > math.pi / 2 > pred.alpha


def test_branch_polygons_equivalent():
    pred = predict(family_from_nu(3, 0.2))
    alt = other_branch(pred)
    assert equivalent(pred.polygon, alt.polygon)


@settings(max_examples=60, deadline=None, derandomize=True)
@given(m=st.integers(1, 8), nu=st.floats(0.0, 5.0))
def test_branch_identity(m, nu):
    a1 = closed_form_alpha(m, nu)
    pred = predict(family_from_nu(m, nu))
    a2 = other_branch(pred).alpha
    assert abs(a1 + a2 - 2.0 * math.pi / (m + 1)) < 1e-12


# ---------------------------------------------------------------------------
# rigidity classifier


def test_shi_tam_examples():
    assert classify_shi_tam(SymmetricFamily(1, 5.0, 0.0)) is True
    assert classify_shi_tam(SymmetricFamily(1, 0.0, 0.01)) is False
    assert classify_shi_tam(SymmetricFamily(1, 0.0, -0.01)) is False


def test_shi_tam_sign_blind():
    up = predict(SymmetricFamily(1, 0.0, 0.01))
    dn = predict(SymmetricFamily(1, 0.0, -0.01))
    assert up.alpha == dn.alpha


def test_shi_tam_requires_m1():
    with pytest.raises(UnsupportedM):
        classify_shi_tam(SymmetricFamily(2, 0.0, 0.0))


# ---------------------------------------------------------------------------
# signed angle function


def test_angle_function_anchor_values():
    for m in (1, 2, 5):
        af = AngleFunction(m)
        assert abs(af(0.0) - math.pi / (m + 1)) < 1e-15
        # matches the closed form through nu = pi b / (2 (m+1)) at b >= 0
        b = 1.7
        nu = math.pi * b / (2 * (m + 1))
        assert abs(af(b) - closed_form_alpha(m, nu)) < 1e-12


def test_angle_function_strictly_decreasing_onto_range():
    af = AngleFunction(2)
    bs = np.linspace(-20.0, 20.0, 10_000)
    vals = np.array([af(b) for b in bs])
    assert np.all(np.diff(vals) < 0)
    hi = 2 * math.pi / 3
    assert np.all(vals > 0) and np.all(vals < hi)
    assert vals[0] > hi - 1e-8
    assert vals[-1] < 1e-8


@settings(max_examples=60, deadline=None, derandomize=True)
@given(m=st.integers(1, 6), b=st.floats(-20.0, 20.0))
def test_angle_function_two_fold_symmetry(m, b):
    af = AngleFunction(m)
    assert abs(af(b) + af(-b) - 2.0 * math.pi / (m + 1)) < 1e-12


def test_two_to_one_covering():
    # P_alpha(b) and P_alpha(-b) are the same isometry class; only b = 0
    # lands on the regular polygon
    m = 2
    regular = predict(SymmetricFamily(m, 0.0, 0.0)).polygon
    for b in (0.3, 1.1, 4.0):
        plus = predict(SymmetricFamily(m, 0.0, b)).polygon
        minus = predict(SymmetricFamily(m, 0.0, -b)).polygon
        assert normalize(plus).vertices == normalize(minus).vertices
        assert not equivalent(plus, regular)
    assert equivalent(predict(SymmetricFamily(m, 0.0, 0.0)).polygon, regular)
