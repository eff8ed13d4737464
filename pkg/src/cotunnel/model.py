"""Anderson-impurity model on the ten-mode registry: parameters, H0, V, scenarios."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from cotunnel.fock import (
    CANONICAL_MODES,
    DOT_DOWN,
    DOT_UP,
    LEAD_POSITIONS,
    FockState,
    Mode,
    Site,
    Spin,
    apply_annihilation,
    apply_creation,
    apply_string,
    mode_energies,
    sector,
    spin_flip,
    state_energy,
)

UP, DN = Spin.UP, Spin.DOWN
SQRT1_2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the dot + three-lead Hamiltonian.

    Left filter modes sit at ``E_L +/- delta_L``, R1 at ``E_L + delta_R`` and
    R2 at ``E_L - delta_R``, the dot level at ``eps_d``.
    """

    E_L: float = -2.0
    delta_L: float = 0.5
    delta_R: float = 1.0
    U: float = 3.0
    eps_d: float = 0.0
    V_L: complex = 1.0
    V_R1: complex = 1.0
    V_R2: complex = 1.0

    def with_(self, **changes) -> ModelParams:
        return replace(self, **changes)

    def coupling(self, site: Site) -> complex:
        return {Site.LEFT: self.V_L, Site.RIGHT1: self.V_R1, Site.RIGHT2: self.V_R2}[site]

    @property
    def coupling_product(self) -> complex:
        """``conj(V_L)**2 * V_R1 * V_R2``, the prefactor shared by every amplitude."""
        return complex(np.conj(self.V_L) ** 2 * self.V_R1 * self.V_R2)


def validate_params(params: ModelParams, warn: bool = False) -> list[str]:
    """Return the identifiers of violated filter constraints (empty list = ok).

    With ``warn=True``, near-zero closed-form denominator factors are reported
    through :mod:`warnings`; they never count as violations.
    """
    bad = []
    if not params.delta_L > 0:
        bad.append("deltaL>0")
    if not params.delta_R > 0:
        bad.append("deltaR>0")
    if not params.delta_L < params.delta_R:
        bad.append("deltaL<deltaR")
    if warn:
        from cotunnel.closedform import near_singular_factors

        for name, value in near_singular_factors(params):
            warnings.warn(f"closed-form factor {name} = {value:.3g} is near zero", stacklevel=2)
    return bad


CONSTRAINT_TEXT = {
    "deltaL>0": "left splitting delta_L must be positive",
    "deltaR>0": "right splitting delta_R must be positive",
    "deltaL<deltaR": "left splitting must be smaller than right splitting (delta_L < delta_R)",
}


# --- kets -------------------------------------------------------------------


@dataclass(frozen=True)
class Ket:
    """Finite superposition of occupation states, ``terms = ((state, coeff), ...)``."""

    terms: tuple[tuple[FockState, complex], ...]

    @classmethod
    def from_string(cls, *modes: Mode, coeff: complex = 1.0) -> Ket:
        """The ket ``coeff * modes[0]^+ modes[1]^+ ... |0>``."""
        res = apply_string(modes)
        if res is None:
            raise ValueError("Pauli violation in operator string " + " ".join(map(str, modes)))
        st, sign = res
        return cls(((st, coeff * sign),))

    def __add__(self, other: Ket) -> Ket:
        acc: dict[FockState, complex] = {}
        for st, c in self.terms + other.terms:
            acc[st] = acc.get(st, 0) + c
        return Ket(tuple((st, c) for st, c in acc.items() if c != 0))

    def scaled(self, factor: complex) -> Ket:
        return Ket(tuple((st, c * factor) for st, c in self.terms))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for _, c in self.terms))

    @property
    def states(self) -> tuple[FockState, ...]:
        return tuple(st for st, _ in self.terms)

    @property
    def particle_count(self) -> int:
        counts = {st.particle_count for st in self.states}
        if len(counts) != 1:
            raise ValueError("ket mixes particle-number sectors")
        return counts.pop()

    def spin_flipped(self) -> Ket:
        out = []
        for st, c in self.terms:
            fst, sign = spin_flip(st)
            out.append((fst, c * sign))
        return Ket(tuple(out))


# --- scenarios --------------------------------------------------------------


class Occupancy(enum.Enum):
    EMPTY = "empty"
    SINGLE_DOWN = "single"
    DOUBLE = "double"


@dataclass(frozen=True)
class FinalChannel:
    label: str
    ket: Ket

    @property
    def amplitude_pairs(self) -> tuple[tuple[FockState, complex], ...]:
        return self.ket.terms


@dataclass(frozen=True)
class Scenario:
    occupancy: Occupancy
    spins: tuple[Spin, Spin]  # (spin in slot k at E_L+delta_L, spin in slot k' at E_L-delta_L)

    @property
    def label(self) -> str:
        return f"{self.occupancy.value}:{''.join(s.value[0] for s in self.spins)}"

    @classmethod
    def parse(cls, text: str) -> Scenario:
        """Parse labels like ``double:du`` (dot occupancy : input spins k,k')."""
        try:
            occ, spins = text.strip().lower().split(":")
            occupancy = Occupancy(occ)
            pair = tuple({"u": UP, "d": DN}[ch] for ch in spins)
        except (ValueError, KeyError):
            raise ValueError(f"bad scenario label {text!r}; expected e.g. 'double:du'") from None
        if len(pair) != 2:
            raise ValueError(f"bad scenario label {text!r}; need two input spins")
        return cls(occupancy, pair)

    def __str__(self) -> str:
        return self.label


def _lead(site: Site, spin: Spin, slot: int = 0) -> Mode:
    return Mode(site, spin, slot)


def _dot(spin: Spin) -> Mode:
    return Mode(Site.DOT, spin)


R1, R2, L = Site.RIGHT1, Site.RIGHT2, Site.LEFT


def _dot_prefix(occupancy: Occupancy) -> tuple[Mode, ...]:
    return {
        Occupancy.EMPTY: (),
        Occupancy.SINGLE_DOWN: (_dot(DN),),
        Occupancy.DOUBLE: (_dot(DN), _dot(UP)),
    }[occupancy]


def initial_ket(scenario: Scenario) -> Ket:
    s1, s2 = scenario.spins
    modes = _dot_prefix(scenario.occupancy) + (_lead(L, s1, 0), _lead(L, s2, 1))
    return Ket.from_string(*modes)


def initial_state(scenario: Scenario, params: ModelParams) -> tuple[Ket, float]:
    """Initial ket (dot prefix applied last, leftmost) and its energy ``eps_i``."""
    ket = initial_ket(scenario)
    (st, _), = ket.terms
    return ket, state_energy(st, params)


def _pair(dot: tuple[Mode, ...], sign: int) -> Ket:
    """``1/sqrt2 * dot^+ (a^+_{R1 up} a^+_{R2 dn} + sign * a^+_{R1 dn} a^+_{R2 up})|0>``."""
    direct = Ket.from_string(*dot, _lead(R1, UP), _lead(R2, DN), coeff=SQRT1_2)
    exchange = Ket.from_string(*dot, _lead(R1, DN), _lead(R2, UP), coeff=sign * SQRT1_2)
    return direct + exchange


def _same(dot: tuple[Mode, ...], spin: Spin) -> Ket:
    return Ket.from_string(*dot, _lead(R1, spin), _lead(R2, spin))


def final_channels(scenario: Scenario) -> tuple[FinalChannel, ...]:
    """Labelled final kets for ``scenario``; pair channels list the direct ket first."""
    s1, s2 = scenario.spins
    occ = scenario.occupancy
    if occ is Occupancy.DOUBLE:
        if s1 != s2:
            full = (_dot(UP), _dot(DN))
            return (FinalChannel("s", _pair(full, -1)), FinalChannel("t", _pair(full, +1)))
        return (FinalChannel(f"{s1.value}{s1.value}", _same((_dot(DN), _dot(UP)), s1)),)
    if occ is Occupancy.SINGLE_DOWN:
        if (s1, s2) == (UP, UP):
            return (
                FinalChannel("up_s", _pair((_dot(UP),), -1)),
                FinalChannel("up_t", _pair((_dot(UP),), +1)),
                FinalChannel("dn_upup", _same((_dot(DN),), UP)),
            )
        if (s1, s2) == (DN, DN):
            return (FinalChannel("dn_dndn", _same((_dot(DN),), DN)),)
        return (
            FinalChannel("dn_s", _pair((_dot(DN),), -1)),
            FinalChannel("dn_t", _pair((_dot(DN),), +1)),
            FinalChannel("up_dndn", _same((_dot(UP),), DN)),
        )
    if s1 != s2:
        return (FinalChannel("s", _pair((), -1)), FinalChannel("t", _pair((), +1)))
    return (FinalChannel(f"{s1.value}{s1.value}", _same((), s1)),)


def catalog() -> tuple[Scenario, ...]:
    """All twelve scenarios: three dot occupancies times four input spin pairs."""
    pairs = ((DN, UP), (UP, DN), (UP, UP), (DN, DN))
    return tuple(Scenario(occ, p) for occ in (Occupancy.DOUBLE, Occupancy.SINGLE_DOWN, Occupancy.EMPTY) for p in pairs)


# --- operators --------------------------------------------------------------


class Direction(enum.Enum):
    LEAD_TO_DOT = "in"
    DOT_TO_LEAD = "out"


def legal_hops(state: FockState):
    """Yield ``(direction, lead_position, new_state, sign)`` for every single V hop.

    ``sign`` is the fermionic sign of ``c_d^+ a_l`` (in) or ``a_l^+ c_d`` (out).
    """
    for lp in LEAD_POSITIONS:
        dp = DOT_UP if CANONICAL_MODES[lp].spin is UP else DOT_DOWN
        lead_occ, dot_occ = state.occupied(lp), state.occupied(dp)
        if lead_occ and not dot_occ:
            st, s1 = apply_annihilation(state, lp)
            st, s2 = apply_creation(st, dp)
            yield Direction.LEAD_TO_DOT, lp, st, s1 * s2
        elif dot_occ and not lead_occ:
            st, s1 = apply_annihilation(state, dp)
            st, s2 = apply_creation(st, lp)
            yield Direction.DOT_TO_LEAD, lp, st, s1 * s2


def hop_coupling(params: ModelParams, direction: Direction, lead_pos: int) -> complex:
    v = params.coupling(CANONICAL_MODES[lead_pos].site)
    return v if direction is Direction.DOT_TO_LEAD else complex(np.conj(v))


@dataclass(frozen=True)
class SectorTables:
    """Parameter-independent structure of one particle-number sector."""

    basis: tuple[FockState, ...]
    index: dict
    occupation: np.ndarray  # (n_states, n_modes) bool
    rows: np.ndarray
    cols: np.ndarray
    site_index: np.ndarray  # 0 -> V_L, 1 -> V_R1, 2 -> V_R2
    outward: np.ndarray
    signs: np.ndarray
    adjacency: sp.csr_matrix


_SITE_INDEX = {Site.LEFT: 0, Site.RIGHT1: 1, Site.RIGHT2: 2}


@lru_cache(maxsize=None)
def sector_tables(n_particles: int) -> SectorTables:
    basis = sector(n_particles)
    index = {st: i for i, st in enumerate(basis)}
    occ = np.array([[st.occupied(p) for p in range(len(CANONICAL_MODES))] for st in basis], dtype=bool)
    rows, cols, sites, outward, signs = [], [], [], [], []
    for j, st in enumerate(basis):
        for direction, lp, new, sign in legal_hops(st):
            rows.append(index[new])
            cols.append(j)
            sites.append(_SITE_INDEX[CANONICAL_MODES[lp].site])
            outward.append(direction is Direction.DOT_TO_LEAD)
            signs.append(sign)
    rows, cols = np.array(rows, dtype=int), np.array(cols, dtype=int)
    n = len(basis)
    adjacency = sp.csr_matrix((np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(n, n))
    return SectorTables(
        basis, index, occ, rows, cols, np.array(sites, dtype=int), np.array(outward), np.array(signs), adjacency
    )


def h0_diagonal(params: ModelParams, n_particles: int, dtype=np.longdouble) -> np.ndarray:
    """Diagonal of H0 on the sector, evaluated in ``dtype``."""
    t = sector_tables(n_particles)
    e = np.array(mode_energies(params, dtype), dtype=dtype)
    diag = (t.occupation * e).sum(axis=1)
    double = t.occupation[:, DOT_UP] & t.occupation[:, DOT_DOWN]
    return diag + np.where(double, dtype(params.U), dtype(0))


def v_dense(params: ModelParams, n_particles: int, dtype=np.clongdouble) -> np.ndarray:
    """Tunneling operator on the sector as a dense matrix in ``dtype``."""
    t = sector_tables(n_particles)
    couplings = np.array([params.V_L, params.V_R1, params.V_R2], dtype=dtype)
    v = couplings[t.site_index]
    vals = np.where(t.outward, v, np.conj(v)) * t.signs
    n = len(t.basis)
    out = np.zeros((n, n), dtype=dtype)
    out[t.rows, t.cols] = vals
    return out


def _sector_of(basis) -> int:
    basis = tuple(basis)
    n = basis[0].particle_count
    if basis != sector_tables(n).basis:
        raise ValueError("basis must be a full particle-number sector in canonical order")
    return n


def build_h0(params: ModelParams, basis) -> sp.dia_matrix:
    return sp.diags(h0_diagonal(params, _sector_of(basis), np.float64))


def build_v(params: ModelParams, basis) -> sp.csr_matrix:
    """Hermitian tunneling operator on ``basis`` (one full particle-number sector)."""
    return sp.csr_matrix(v_dense(params, _sector_of(basis), np.complex128))


def sector_basis(n_particles: int) -> tuple[FockState, ...]:
    return sector_tables(n_particles).basis
