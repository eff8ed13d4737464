import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cotunnel.fock import CANONICAL_MODES, DOT_DOWN, DOT_UP, LEAD_POSITIONS, FockState, spin_flip, state_energy
from cotunnel.model import (
    Ket,
    ModelParams,
    Occupancy,
    Scenario,
    Spin,
    build_h0,
    build_v,
    catalog,
    final_channels,
    initial_state,
    sector_basis,
    validate_params,
)

UP, DN = Spin.UP, Spin.DOWN


@pytest.mark.parametrize(
    "dL, dR, expected",
    [
        (0.5, 1.0, []),
        (1.0, 0.5, ["deltaL<deltaR"]),
        (-0.1, 1.0, ["deltaL>0"]),
        (0.5, -1.0, ["deltaR>0", "deltaL<deltaR"]),
    ],
)
def test_validate_params(dL, dR, expected):
    assert validate_params(ModelParams(delta_L=dL, delta_R=dR)) == expected


def test_validate_warns_on_near_singular_factor():
    p = ModelParams(E_L=-0.5, delta_L=0.5, delta_R=1.0)
    with pytest.warns(UserWarning, match="E_L"):
        assert validate_params(p, warn=True) == []


def test_h0_four_particle_sector(default_params):
    basis = sector_basis(4)
    h0 = build_h0(default_params, basis)
    assert h0.shape == (210, 210)
    diag = h0.diagonal()
    assert np.isrealobj(diag)
    assert sp.linalg.norm(h0 - sp.diags(diag)) == 0
    ini, eps_i = initial_state(Scenario(Occupancy.DOUBLE, (DN, UP)), default_params)
    (st0, _), = ini.terms
    assert diag[basis.index(st0)] == pytest.approx(2 * default_params.E_L + default_params.U)
    assert eps_i == 2 * default_params.E_L + default_params.U


def test_h0_matches_state_energy(default_params):
    basis = sector_basis(3)
    diag = build_h0(default_params, basis).diagonal()
    expected = [state_energy(s, default_params) for s in basis]
    np.testing.assert_allclose(diag, expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_v_is_hermitian(n):
    p = ModelParams(V_L=0.3 + 0.7j, V_R1=-1.1 + 0.2j, V_R2=0.5 - 0.4j)
    v = build_v(p, sector_basis(n))
    assert sp.linalg.norm(v - v.conj().T) == 0


def _brute_hop_count(bits: int) -> int:
    count = 0
    for lp in LEAD_POSITIONS:
        dp = DOT_UP if CANONICAL_MODES[lp].spin is UP else DOT_DOWN
        count += ((bits >> lp) & 1) != ((bits >> dp) & 1)
    return count


@pytest.mark.parametrize("n", [2, 3, 4])
def test_v_row_nonzeros_bounded(n):
    basis = sector_basis(n)
    v = build_v(ModelParams(), basis).tocsr()
    nnz = np.diff(v.indptr)
    brute = [_brute_hop_count(s.bits) for s in basis]
    assert list(nnz) == brute
    assert max(nnz) <= 8


def test_full_dot_receives_no_electron():
    basis = sector_basis(4)
    v = build_v(ModelParams(), basis).tocoo()
    for r, c in zip(v.row, v.col):
        before, after = basis[c], basis[r]
        if before.occupied(DOT_UP) and before.occupied(DOT_DOWN):
            assert not (after.occupied(DOT_UP) and after.occupied(DOT_DOWN))


def _flip_matrix(basis):
    index = {s: i for i, s in enumerate(basis)}
    rows, cols, vals = [], [], []
    for j, s in enumerate(basis):
        t, sign = spin_flip(s)
        rows.append(index[t])
        cols.append(j)
        vals.append(sign)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(basis), len(basis)))


@pytest.mark.parametrize("n", [3, 4])
def test_spin_flip_commutes_with_h0_and_v(n, default_params):
    basis = sector_basis(n)
    P = _flip_matrix(basis)
    p = default_params.with_(V_L=0.8 - 0.3j, V_R1=1.2, V_R2=0.4 + 0.9j)
    for op in (build_h0(p, basis), build_v(p, basis)):
        assert sp.linalg.norm(P @ op @ P.T - op) == 0


def test_initial_state_examples(default_params):
    p = default_params
    ket, e = initial_state(Scenario(Occupancy.DOUBLE, (DN, UP)), p)
    assert ket.particle_count == 4 and e == 2 * p.E_L + p.U
    ket, e = initial_state(Scenario(Occupancy.SINGLE_DOWN, (UP, UP)), p)
    assert ket.particle_count == 3 and e == 2 * p.E_L
    ket, e = initial_state(Scenario(Occupancy.EMPTY, (UP, DN)), p)
    assert ket.particle_count == 2 and e == 2 * p.E_L


def test_initial_state_sign_follows_operator_string():
    # c^+_dn c^+_up a^+_{k,dn} a^+_{k',up}|0>: reordering to canonical order is odd
    ket, _ = initial_state(Scenario(Occupancy.DOUBLE, (DN, UP)), ModelParams())
    (st0, c), = ket.terms
    assert st0.occupied_positions == (1, 2, DOT_UP, DOT_DOWN)
    assert c == -1


def test_channel_catalog():
    labels = {sc.label: [c.label for c in final_channels(sc)] for sc in catalog()}
    assert labels["double:du"] == ["s", "t"]
    assert labels["double:ud"] == ["s", "t"]
    assert labels["double:uu"] == ["upup"]
    assert labels["double:dd"] == ["dndn"]
    assert labels["single:uu"] == ["up_s", "up_t", "dn_upup"]
    assert labels["single:dd"] == ["dn_dndn"]
    assert labels["single:du"] == ["dn_s", "dn_t", "up_dndn"]
    assert labels["single:ud"] == ["dn_s", "dn_t", "up_dndn"]
    assert labels["empty:du"] == ["s", "t"]
    assert labels["empty:uu"] == ["upup"]


def test_singlet_triplet_coefficients():
    s, t = final_channels(Scenario(Occupancy.DOUBLE, (DN, UP)))
    # c^+_up c^+_dn is already canonical; a^+_{R1} a^+_{R2} too, so coefficients are plain -+1/sqrt2
    assert [c for _, c in s.ket.terms] == pytest.approx([1 / math.sqrt(2), -1 / math.sqrt(2)])
    assert [c for _, c in t.ket.terms] == pytest.approx([1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert s.ket.states == t.ket.states


@pytest.mark.parametrize("scenario", catalog(), ids=str)
def test_channels_normalized_and_in_sector(scenario, default_params):
    ini, eps_i = initial_state(scenario, default_params)
    for ch in final_channels(scenario):
        assert ch.ket.norm == pytest.approx(1.0, abs=1e-15)
        assert ch.ket.particle_count == ini.particle_count
        for s in ch.ket.states:
            assert state_energy(s, default_params) == pytest.approx(eps_i, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-5, -0.5),
    st.floats(0.01, 0.99),
    st.floats(1.0, 2.0),
    st.floats(0.0, 10.0),
    st.floats(-1.0, 1.0),
)
def test_energy_conservation_for_final_kets(E_L, dL, dR, U, eps_d):
    p = ModelParams(E_L=E_L, delta_L=dL, delta_R=dR, U=U, eps_d=eps_d)
    for sc in catalog():
        _, eps_i = initial_state(sc, p)
        for ch in final_channels(sc):
            for s in ch.ket.states:
                assert state_energy(s, p) == pytest.approx(eps_i, rel=1e-12, abs=1e-12)


def test_scenario_parse_roundtrip():
    for sc in catalog():
        assert Scenario.parse(sc.label) == sc
    with pytest.raises(ValueError):
        Scenario.parse("full:du")
    with pytest.raises(ValueError):
        Scenario.parse("double:u")


def test_ket_rejects_pauli_violation():
    from cotunnel.fock import Mode, Site

    m = Mode(Site.DOT, UP)
    with pytest.raises(ValueError):
        Ket.from_string(m, m)
