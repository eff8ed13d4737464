"""Ten-mode fermionic Fock space with a fixed Jordan-Wigner ordering.

Registry order (position: mode)::

    0 L,k,up    1 L,k,dn    2 L,k',up   3 L,k',dn
    4 R1,up     5 R1,dn     6 R2,up     7 R2,dn
    8 d,up      9 d,dn

A creation or annihilation operator at position ``p`` picks up
``(-1)**(number of occupied positions < p)``. Every amplitude sign in the
package is relative to this order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from cotunnel.model import ModelParams


class Site(enum.Enum):
    LEFT = "L"
    RIGHT1 = "R1"
    RIGHT2 = "R2"
    DOT = "d"


class Spin(enum.Enum):
    UP = "up"
    DOWN = "dn"

    def flipped(self) -> Spin:
        return Spin.DOWN if self is Spin.UP else Spin.UP


@dataclass(frozen=True, order=False)
class Mode:
    site: Site
    spin: Spin
    slot: int = 0  # 0 -> k (E_L + delta_L), 1 -> k' (E_L - delta_L); 0 elsewhere

    @property
    def is_dot(self) -> bool:
        return self.site is Site.DOT

    @property
    def label(self) -> str:
        if self.site is Site.LEFT:
            name = "L,k" if self.slot == 0 else "L,k'"
        else:
            name = self.site.value
        return f"{name},{self.spin.value}"

    def flipped(self) -> Mode:
        return Mode(self.site, self.spin.flipped(), self.slot)

    def __str__(self) -> str:
        return self.label


CANONICAL_MODES: tuple[Mode, ...] = (
    Mode(Site.LEFT, Spin.UP, 0),
    Mode(Site.LEFT, Spin.DOWN, 0),
    Mode(Site.LEFT, Spin.UP, 1),
    Mode(Site.LEFT, Spin.DOWN, 1),
    Mode(Site.RIGHT1, Spin.UP),
    Mode(Site.RIGHT1, Spin.DOWN),
    Mode(Site.RIGHT2, Spin.UP),
    Mode(Site.RIGHT2, Spin.DOWN),
    Mode(Site.DOT, Spin.UP),
    Mode(Site.DOT, Spin.DOWN),
)
N_MODES = len(CANONICAL_MODES)
POSITION: dict[Mode, int] = {m: i for i, m in enumerate(CANONICAL_MODES)}
DOT_UP = POSITION[Mode(Site.DOT, Spin.UP)]
DOT_DOWN = POSITION[Mode(Site.DOT, Spin.DOWN)]
LEAD_POSITIONS: tuple[int, ...] = tuple(i for i, m in enumerate(CANONICAL_MODES) if not m.is_dot)


@dataclass(frozen=True)
class ModeRegistry:
    modes: tuple[Mode, ...]
    energies: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("duplicate mode in registry")
        if len(self.energies) != len(self.modes):
            raise ValueError("one energy per mode required")

    def __len__(self) -> int:
        return len(self.modes)

    def position(self, mode: Mode) -> int:
        return self.modes.index(mode)

    def energy_of(self, mode: Mode) -> float:
        return self.energies[self.position(mode)]


def mode_energies(params: ModelParams, dtype=float):
    """Single-particle energies in registry order, computed in ``dtype``."""
    E_L, dL, dR, eps = (dtype(x) for x in (params.E_L, params.delta_L, params.delta_R, params.eps_d))
    lead_energy = {
        (Site.LEFT, 0): E_L + dL,
        (Site.LEFT, 1): E_L - dL,
        (Site.RIGHT1, 0): E_L + dR,
        (Site.RIGHT2, 0): E_L - dR,
    }
    return [eps if m.is_dot else lead_energy[(m.site, m.slot)] for m in CANONICAL_MODES]


def build_registry(params: ModelParams) -> ModeRegistry:
    """Canonical 10-mode registry with the filter-energy layout of ``params``."""
    return ModeRegistry(CANONICAL_MODES, tuple(mode_energies(params)))


@dataclass(frozen=True)
class FockState:
    """Occupation-number basis state; bit ``p`` of ``bits`` is registry position ``p``."""

    bits: int
    particle_count: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.bits < 0 or self.bits >> N_MODES:
            raise ValueError(f"occupation {self.bits:#x} outside the {N_MODES}-mode registry")
        object.__setattr__(self, "particle_count", self.bits.bit_count())

    @classmethod
    def vacuum(cls) -> FockState:
        return cls(0)

    @classmethod
    def from_modes(cls, modes) -> FockState:
        bits = 0
        for m in modes:
            bits |= 1 << POSITION[m]
        return cls(bits)

    def occupied(self, pos: int) -> bool:
        return bool(self.bits >> pos & 1)

    @property
    def occupied_positions(self) -> tuple[int, ...]:
        return tuple(p for p in range(N_MODES) if self.bits >> p & 1)

    @property
    def occupied_modes(self) -> tuple[Mode, ...]:
        return tuple(CANONICAL_MODES[p] for p in self.occupied_positions)

    def label(self) -> str:
        return "|" + " ".join(m.label for m in self.occupied_modes) + ">"

    def __str__(self) -> str:
        return self.label()


def _parity_before(bits: int, pos: int) -> int:
    return -1 if (bits & ((1 << pos) - 1)).bit_count() & 1 else 1


def _pos(mode: Mode | int) -> int:
    return mode if isinstance(mode, int) else POSITION[mode]


def apply_creation(state: FockState, mode: Mode | int) -> tuple[FockState, int] | None:
    """Apply ``a_mode^+``. Returns ``None`` if the mode is already occupied."""
    p = _pos(mode)
    if state.bits >> p & 1:
        return None
    return FockState(state.bits | (1 << p)), _parity_before(state.bits, p)


def apply_annihilation(state: FockState, mode: Mode | int) -> tuple[FockState, int] | None:
    """Apply ``a_mode``. Returns ``None`` if the mode is empty."""
    p = _pos(mode)
    if not state.bits >> p & 1:
        return None
    return FockState(state.bits & ~(1 << p)), _parity_before(state.bits, p)


def apply_string(modes, state: FockState | None = None) -> tuple[FockState, int] | None:
    """Act with the product of creation operators ``modes[0]^+ modes[1]^+ ...`` on ``state``.

    The rightmost operator acts first, as in an operator string written
    against a ket. ``None`` if a mode is doubly created.
    """
    st = FockState.vacuum() if state is None else state
    sign = 1
    for m in reversed(list(modes)):
        res = apply_creation(st, m)
        if res is None:
            return None
        st, s = res
        sign *= s
    return st, sign


def state_energy(state: FockState, params: ModelParams, registry: ModeRegistry | None = None) -> float:
    """Diagonal energy: occupied single-particle energies plus ``U`` on double dot occupancy."""
    reg = build_registry(params) if registry is None else registry
    e = sum(reg.energies[p] for p in state.occupied_positions)
    if state.occupied(DOT_UP) and state.occupied(DOT_DOWN):
        e += params.U
    return e


def spin_flip(state: FockState) -> tuple[FockState, int]:
    """Global up<->down relabeling as a unitary on Fock space.

    Each occupied mode maps to its spin partner; the sign is the parity of
    the permutation needed to restore canonical order of the relabeled
    creation string.
    """
    targets = [POSITION[CANONICAL_MODES[p].flipped()] for p in state.occupied_positions]
    inversions = sum(1 for i in range(len(targets)) for j in range(i + 1, len(targets)) if targets[i] > targets[j])
    bits = 0
    for q in targets:
        bits |= 1 << q
    return FockState(bits), -1 if inversions & 1 else 1


def sector(n_particles: int) -> tuple[FockState, ...]:
    """All states with ``n_particles`` electrons, ordered by occupation integer."""
    return tuple(FockState(b) for b in range(1 << N_MODES) if b.bit_count() == n_particles)
