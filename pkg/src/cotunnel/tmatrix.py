"""Fourth-order T-matrix amplitudes, computed two independent ways.

``fourth_order_amplitude`` multiplies ``V G V G V G V`` on the sector basis
(sparse matrix-vector products). ``path_sum_amplitude`` enumerates every
ordered sequence of four hops from the initial to the final occupation
state and sums ``couplings * signs / denominators`` path by path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from cotunnel.fock import CANONICAL_MODES, DOT_DOWN, DOT_UP, LEAD_POSITIONS, FockState, Mode, Site, mode_energies
from cotunnel.model import (
    Direction,
    FinalChannel,
    Ket,
    ModelParams,
    Scenario,
    final_channels,
    hop_coupling,
    initial_state,
    h0_diagonal,
    legal_hops,
    sector_tables,
    v_dense,
)

ORDER = 4
_LEAD_MASK = sum(1 << p for p in LEAD_POSITIONS)


class SingularDenominator(ArithmeticError):
    """A virtual state on a contributing route is (nearly) degenerate with the initial state."""

    def __init__(self, state: FockState, energy: float, eps_i: float):
        self.state = state
        self.energy = energy
        self.eps_i = eps_i
        super().__init__(
            f"intermediate state {state.label()} has energy {energy!r}, "
            f"degenerate with initial energy {eps_i!r}"
        )


def default_tol(eps_i: float) -> float:
    return 1e-9 * max(1.0, abs(eps_i))


def _as_ket(k) -> Ket:
    if isinstance(k, FinalChannel):
        return k.ket
    if isinstance(k, FockState):
        return Ket(((k, 1.0),))
    return k


_REAL, _COMPLEX = np.longdouble, np.clongdouble


@lru_cache(maxsize=64)
def _operators(params: ModelParams, n: int):
    return v_dense(params, n, _COMPLEX), h0_diagonal(params, n, _REAL)


def _energy(state: FockState, params: ModelParams, modes: np.ndarray):
    e = sum((modes[p] for p in state.occupied_positions), _REAL(0))
    if state.occupied(DOT_UP) and state.occupied(DOT_DOWN):
        e += _REAL(params.U)
    return e


def _mode_energies(params: ModelParams) -> np.ndarray:
    return np.array(mode_energies(params, _REAL), dtype=_REAL)


def _initial_energy(ket: Ket, params: ModelParams):
    modes = _mode_energies(params)
    energies = [_energy(st, params, modes) for st in ket.states]
    if max(energies) - min(energies) > default_tol(float(energies[0])):
        raise ValueError("initial ket is not an eigenstate of H0")
    return energies[0]


# --- resolvent product ------------------------------------------------------


def fourth_order_amplitude(initial, final, params: ModelParams, tol: float | None = None) -> complex:
    """``<final| V G V G V G V |initial>`` with ``G = 1/(eps_i - H0)``.

    The resolvent is applied only to states lying on some route from
    ``initial`` to ``final``; other states cannot contribute. A contributing
    state closer than ``tol`` to ``eps_i`` raises :class:`SingularDenominator`.
    Arithmetic is carried out in extended precision.
    """
    ini, fin = _as_ket(initial), _as_ket(final)
    n = ini.particle_count
    if fin.particle_count != n:
        return 0j
    t = sector_tables(n)
    eps_i = _initial_energy(ini, params)
    tol = default_tol(float(eps_i)) if tol is None else tol
    V, diag = _operators(params, n)
    denom = eps_i - diag

    size = len(t.basis)
    start = np.array([t.index[st] for st, _ in ini.terms])
    end = np.array([t.index[st] for st, _ in fin.terms])
    fwd = [np.zeros(size, dtype=np.int32)]
    bwd = [np.zeros(size, dtype=np.int32)]
    fwd[0][start] = 1
    bwd[0][end] = 1
    for _ in range(ORDER - 1):
        # hop adjacency is symmetric (V is Hermitian)
        fwd.append((t.adjacency @ fwd[-1] > 0).astype(np.int32))
        bwd.append((t.adjacency @ bwd[-1] > 0).astype(np.int32))

    x = np.array([c for _, c in ini.terms], dtype=_COMPLEX)
    prev = start
    for depth in range(1, ORDER):
        live = np.flatnonzero(fwd[depth] & bwd[ORDER - depth])
        d = denom[live]
        bad = np.abs(d) < tol
        if bad.any():
            i = int(live[np.flatnonzero(bad)[0]])
            raise SingularDenominator(t.basis[i], float(diag[i]), float(eps_i))
        x = (V[np.ix_(live, prev)] @ x) / d
        prev = live
    x = V[np.ix_(end, prev)] @ x
    total = np.conj(np.array([c for _, c in fin.terms], dtype=_COMPLEX)) @ x
    return complex(total)


# --- explicit paths ---------------------------------------------------------


@dataclass(frozen=True)
class Hop:
    direction: Direction
    lead: Mode
    state: FockState  # state after the hop
    sign: int
    coupling: complex

    @property
    def descriptor(self) -> tuple[str, int]:
        return (self.direction.value, LEAD_POSITIONS.index(CANONICAL_MODES.index(self.lead)))

    def label(self) -> str:
        return f"{self.lead.label}->d" if self.direction is Direction.LEAD_TO_DOT else f"d->{self.lead.label}"


@dataclass(frozen=True)
class Path:
    hops: tuple[Hop, ...]
    energies: tuple[float, ...]  # of the three intermediate states
    denominators: tuple[float, ...]
    amplitude: complex

    @property
    def intermediates(self) -> tuple[FockState, ...]:
        return tuple(h.state for h in self.hops[:-1])

    @property
    def final(self) -> FockState:
        return self.hops[-1].state

    def label(self) -> str:
        return " ; ".join(h.label() for h in self.hops)

    def first_output_site(self) -> Site:
        return next(h.lead.site for h in self.hops if h.direction is Direction.DOT_TO_LEAD)


@lru_cache(maxsize=4096)
def _topologies(start: FockState, target: FockState) -> tuple[tuple, ...]:
    """All hop sequences of length four from ``start`` to ``target``.

    Each hop moves exactly one lead electron, so a branch whose lead
    occupation differs from the target in more bits than hops remain is cut.
    """
    found = []

    def dfs(state, seq):
        left = ORDER - len(seq)
        if left == 0:
            if state == target:
                found.append(tuple(seq))
            return
        if ((state.bits ^ target.bits) & _LEAD_MASK).bit_count() > left:
            return
        for direction, lp, new, sign in legal_hops(state):
            seq.append((direction, lp, new, sign))
            dfs(new, seq)
            seq.pop()

    dfs(start, [])
    found.sort(key=lambda seq: [(d.value, LEAD_POSITIONS.index(lp)) for d, lp, _, _ in seq])
    return tuple(found)


def enumerate_paths(initial, product: FockState, params: ModelParams, tol: float | None = None) -> list[Path]:
    """Every four-hop virtual path from ``initial`` to the occupation state ``product``.

    Amplitudes are for bare occupation states; ket coefficients are applied
    by :func:`path_sum_amplitude`. Ordering is lexicographic in
    ``(direction, lead position)`` hop descriptors.
    """
    start = initial if isinstance(initial, FockState) else _single_state(_as_ket(initial))
    modes = _mode_energies(params)
    eps_i = _energy(start, params, modes)
    tol = default_tol(float(eps_i)) if tol is None else tol
    paths = []
    for seq in _topologies(start, product):
        hops = tuple(
            Hop(d, CANONICAL_MODES[lp], st, sign, hop_coupling(params, d, lp)) for d, lp, st, sign in seq
        )
        energies = tuple(_energy(h.state, params, modes) for h in hops[:-1])
        denoms = tuple(eps_i - e for e in energies)
        for h, e, dn in zip(hops, energies, denoms):
            if abs(dn) < tol:
                raise SingularDenominator(h.state, float(e), float(eps_i))
        num = _COMPLEX(1)
        for h in hops:
            num *= _COMPLEX(h.coupling) * h.sign
        paths.append(Path(hops, energies, denoms, num / (denoms[0] * denoms[1] * denoms[2])))
    return paths


def _single_state(ket: Ket) -> FockState:
    if len(ket.terms) != 1:
        raise ValueError("path enumeration needs a single occupation state as the initial ket")
    return ket.terms[0][0]


def channel_paths(initial, final, params: ModelParams, tol: float | None = None) -> dict[FockState, list[Path]]:
    """Paths grouped by the product state of ``final`` they terminate in (ket order kept)."""
    fin = _as_ket(final)
    return {st: enumerate_paths(initial, st, params, tol) for st, _ in fin.terms}


def path_sum_amplitude(initial, final, params: ModelParams, tol: float | None = None) -> complex:
    ini, fin = _as_ket(initial), _as_ket(final)
    total = _COMPLEX(0)
    for st_i, c_i in ini.terms:
        for st_f, c_f in fin.terms:
            s = sum((p.amplitude for p in enumerate_paths(st_i, st_f, params, tol)), _COMPLEX(0))
            total += np.conj(_COMPLEX(c_f)) * _COMPLEX(c_i) * s
    return complex(total)


def partition_direct_exchange(paths, final_pair: tuple[FockState, FockState] | None = None):
    """Split paths into ``(direct, exchange)`` lists.

    With ``final_pair`` the split is by terminal product state (first entry
    is direct). Without it, for same-spin outputs ending in one product
    state, a path is direct when R1 receives the first outgoing electron.
    """
    if final_pair is not None:
        direct_state, exchange_state = final_pair
        direct = [p for p in paths if p.final == direct_state]
        exchange = [p for p in paths if p.final == exchange_state]
        if len(direct) + len(exchange) != len(paths):
            raise ValueError("paths terminate outside the given final pair")
        return direct, exchange
    direct = [p for p in paths if p.first_output_site() is Site.RIGHT1]
    exchange = [p for p in paths if p.first_output_site() is Site.RIGHT2]
    return direct, exchange


# --- per-scenario report ----------------------------------------------------


@dataclass(frozen=True)
class ChannelReport:
    label: str
    exact: complex
    path_sum: complex
    paths: dict  # product FockState -> list[Path]
    closed_form: complex | None

    @property
    def path_count(self) -> int:
        return sum(len(v) for v in self.paths.values())


def amplitude_report(scenario: Scenario, params: ModelParams, tol: float | None = None) -> list[ChannelReport]:
    from cotunnel.closedform import closed_form_amplitudes

    ini, _ = initial_state(scenario, params)
    closed = closed_form_amplitudes(scenario, params)
    out = []
    for ch in final_channels(scenario):
        paths = channel_paths(ini, ch, params, tol)
        c_i = _COMPLEX(ini.terms[0][1])
        ps = sum(
            (np.conj(_COMPLEX(c)) * c_i * sum((p.amplitude for p in paths[st]), _COMPLEX(0)) for st, c in ch.ket.terms),
            _COMPLEX(0),
        )
        out.append(
            ChannelReport(
                ch.label,
                fourth_order_amplitude(ini, ch, params, tol),
                complex(ps),
                paths,
                closed.get(ch.label),
            )
        )
    return out
