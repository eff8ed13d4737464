import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cotunnel.closedform import (
    NearSingularFactor,
    NoValidRoot,
    _quadratic_roots,
    closed_form_amplitudes,
    near_singular_factors,
    one_dot_diff_spin_amplitudes,
    one_dot_same_spin_singlet,
    one_dot_same_spin_singlet_limit,
    solve_tuneoff_delta_r,
    tuneoff_residual,
    tuneoff_residual_scale,
    tuneoff_roots,
    two_dot_singlet,
    two_dot_triplet,
)
from cotunnel.model import ModelParams, Scenario

SQRT2 = math.sqrt(2)
E, DL, DR, U = F(-2), F(1, 2), F(1), F(3)

# Exact rational parts at the reference point, multiplied by sqrt(2) once at the end.
TWO_DOT = 2 * U * (E - U) / ((2 * E - U) * ((E - U) ** 2 - DL**2) * ((E - U) ** 2 - DR**2))
SAME_SPIN = -2 * DL * U**2 / ((E**2 - DL**2) * (DL**2 - DR**2) * ((E - U) ** 2 - DL**2))
RESIDUAL = (E * U - E**2 + DR**2) * (DL**2 - DR**2 + DL * U) + U**2 * DR**2
COMMON = (E**2 - DR**2) * (DL**2 - DR**2) * ((E - U) ** 2 - DR**2)
DIFF_SINGLET = U * RESIDUAL / (COMMON * (E + DL) * (E - DL - U))
DIFF_TRIPLET = -DR * U**2 / COMMON


def test_reference_values_match_rational_oracle(default_params):
    assert two_dot_singlet(default_params).real == pytest.approx(float(TWO_DOT) * SQRT2, rel=1e-15)
    assert two_dot_singlet(default_params).real == pytest.approx(0.010203561056082937, rel=1e-15)
    assert one_dot_same_spin_singlet(default_params).real == pytest.approx(float(SAME_SPIN) * SQRT2, rel=1e-15)
    assert one_dot_same_spin_singlet(default_params).real == pytest.approx(0.18284781412500625, rel=1e-15)
    s, t, f = one_dot_diff_spin_amplitudes(default_params)
    assert s.real == pytest.approx(float(DIFF_SINGLET) * SQRT2, rel=1e-15)
    assert s.real == pytest.approx(-0.02142747821777417, rel=1e-15)
    assert t.real == pytest.approx(0.23570226039551584, rel=1e-15)
    assert f == -t
    assert tuneoff_residual(default_params) == float(RESIDUAL) == 2.25
    assert one_dot_same_spin_singlet_limit(default_params).real == pytest.approx(0.5028314888437672, rel=1e-15)
    assert two_dot_triplet(default_params) == 0


def test_u_zero_gives_zero(default_params):
    p = default_params.with_(U=0.0)
    assert two_dot_singlet(p) == 0
    assert one_dot_same_spin_singlet(p) == 0
    assert all(v == 0 for v in one_dot_diff_spin_amplitudes(p))


def test_large_u_limit(default_params):
    p = default_params.with_(U=1e7)
    assert one_dot_same_spin_singlet(p) == pytest.approx(one_dot_same_spin_singlet_limit(p), rel=1e-5)
    # two-dot singlet decays like 2*sqrt(2)/U^3
    big = default_params.with_(U=1e6)
    assert abs(two_dot_singlet(big).real * 1e18 - 2 * SQRT2) < 1e-4


finite = st.floats(0.05, 4)


@settings(max_examples=200)
@given(st.floats(-5, -0.1), finite, finite, finite)
def test_two_dot_singlet_even_in_splittings(E_L, dL, dR, U):
    p = ModelParams(E_L=E_L, delta_L=dL, delta_R=dR, U=U)
    assume(not near_singular_factors(p))
    v = two_dot_singlet(p)
    for q in (p.with_(delta_L=-dL), p.with_(delta_R=-dR)):
        assert two_dot_singlet(q) == pytest.approx(v, rel=1e-14)


@settings(max_examples=200)
@given(st.floats(-5, -0.1), finite, finite, finite)
def test_same_spin_singlet_odd_in_left_splitting(E_L, dL, dR, U):
    p = ModelParams(E_L=E_L, delta_L=dL, delta_R=dR, U=U)
    try:
        v = one_dot_same_spin_singlet(p)
        w = one_dot_same_spin_singlet(p.with_(delta_L=-dL))
    except NearSingularFactor:
        return
    assert w == pytest.approx(-v, rel=1e-14)


@settings(max_examples=200)
@given(st.floats(-5, 5), finite, finite, st.floats(-4, 4))
def test_flip_is_minus_triplet(E_L, dL, dR, U):
    try:
        _, t, f = one_dot_diff_spin_amplitudes(ModelParams(E_L=E_L, delta_L=dL, delta_R=dR, U=U))
    except NearSingularFactor:
        return
    assert f + t == 0


def test_near_singular_factor_raised(default_params):
    p = default_params.with_(E_L=-0.5)  # E_L + delta_L = 0
    with pytest.raises(NearSingularFactor) as exc:
        one_dot_diff_spin_amplitudes(p)
    assert exc.value.name == "E_L+dL"
    assert "E_L+dL" in [n for n, _ in near_singular_factors(p)]
    assert closed_form_amplitudes(Scenario.parse("single:du"), p) == {"dn_s": None, "dn_t": None, "up_dndn": None}
    with pytest.raises(NearSingularFactor):
        two_dot_singlet(default_params.with_(delta_R=5.0))


def test_closed_form_availability(default_params):
    assert closed_form_amplitudes(Scenario.parse("empty:du"), default_params) == {}
    assert closed_form_amplitudes(Scenario.parse("double:du"), default_params.with_(eps_d=0.1)) == {}
    assert set(closed_form_amplitudes(Scenario.parse("single:uu"), default_params)) == {"up_s", "up_t", "dn_upup"}
    du = closed_form_amplitudes(Scenario.parse("double:du"), default_params)
    ud = closed_form_amplitudes(Scenario.parse("double:ud"), default_params)
    assert du["s"] == pytest.approx(ud["s"])  # even in delta_L


coef = st.one_of(st.just(0.0), st.floats(1e-6, 1e3), st.floats(-1e3, -1e-6))


@settings(max_examples=300)
@given(coef, coef, coef)
def test_quadratic_roots_agree_with_companion_matrix(a, b, c):
    assume(abs(a) > 1e-3)
    ours = _quadratic_roots(a, b, c)
    assert bool(ours) == (b * b - 4 * a * c >= 0)
    ref = np.roots([a, b, c])
    size = max(abs(ref))
    for r in ours:
        assert abs(a * r * r + b * r + c) <= 1e-9 * (abs(a) * r * r + abs(b * r) + abs(c))
        assert min(abs(ref - r)) <= 1e-6 * size


def test_reference_tuneoff_roots():
    roots = tuneoff_roots(-2.0, 0.5, 3.0)
    assert [r.valid for r in roots] == [True, True]
    assert roots[0].delta_R == pytest.approx(0.9384872530412323, rel=1e-15)
    assert roots[0].delta_R == pytest.approx(0.93851, abs=1e-4)
    assert roots[1].delta_R == pytest.approx(4.457492757, rel=1e-9)
    assert solve_tuneoff_delta_r(-2.0, 0.5, 3.0) == [r.delta_R for r in roots]


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, -0.1), st.one_of(st.just(0.0), st.floats(1e-3, 2.0)), st.floats(0.1, 10))
def test_roots_zero_the_residual_and_singlet(E_L, dL, U):
    try:
        roots = solve_tuneoff_delta_r(E_L, dL, U)
    except NoValidRoot:
        return
    for dR in roots:
        p = ModelParams(E_L=E_L, delta_L=dL, delta_R=dR, U=U)
        assert abs(tuneoff_residual(p)) <= 1e-9 * tuneoff_residual_scale(p)
        try:
            s, t, _ = one_dot_diff_spin_amplitudes(p)
        except NearSingularFactor:
            continue
        assert abs(s) <= 1e-10 * abs(t)


def test_large_u_root_approaches_limit():
    # for U -> infinity the smaller root tends to delta_R^2 = -E_L * delta_L
    (dR, *_) = solve_tuneoff_delta_r(-2.0, 0.5, 1e6)
    assert abs(dR**2 - 1.0) < 1e-4
    (dR, *_) = solve_tuneoff_delta_r(-3.0, 0.75, 1e6)
    assert abs(dR**2 - 2.25) < 1e-4


def test_no_valid_root_and_bad_input():
    with pytest.raises(NoValidRoot):
        solve_tuneoff_delta_r(-2.0, 5.0, -3.0)
    with pytest.raises(ValueError):
        tuneoff_roots(-2.0, -0.5, 3.0)
    assert solve_tuneoff_delta_r(-2.0, 0.0, 3.0)  # delta_L = 0 is allowed
