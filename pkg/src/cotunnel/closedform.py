"""Closed-form co-tunneling amplitudes at ``eps_d = 0`` and the singlet tune-off condition.

Formulas are coded exactly as derived analytically, signs included. Any
global sign offset relative to the exact engine (a consequence of
operator-ordering conventions) is handled by the verification layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cotunnel.model import ModelParams, Occupancy, Scenario, Spin

_R, _C = np.longdouble, np.clongdouble
SQRT2 = np.sqrt(_R(2))
FACTOR_RTOL = 1e-9


class NearSingularFactor(ZeroDivisionError):
    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"denominator factor {name} = {value!r} is near zero")


class NoValidRoot(ValueError):
    pass


def _ld(p: ModelParams):
    """``(E_L, delta_L, delta_R, U, coupling_product)`` in extended precision."""
    c = np.conj(_C(p.V_L)) ** 2 * _C(p.V_R1) * _C(p.V_R2)
    return _R(p.E_L), _R(p.delta_L), _R(p.delta_R), _R(p.U), c


def _factor(name: str, value: float, scale: float) -> float:
    if abs(value) < FACTOR_RTOL * max(1.0, scale):
        raise NearSingularFactor(name, value)
    return value


def _factors(p: ModelParams) -> dict[str, tuple[float, float]]:
    """Every denominator factor used below, as ``name -> (value, scale)``."""
    E, dL, dR, U, _ = _ld(p)
    EU = E - U
    return {
        "2E_L-U": (2 * E - U, 2 * abs(E) + abs(U)),
        "(E_L-U)^2-dL^2": (EU**2 - dL**2, EU**2 + dL**2),
        "(E_L-U)^2-dR^2": (EU**2 - dR**2, EU**2 + dR**2),
        "E_L^2-dL^2": (E**2 - dL**2, E**2 + dL**2),
        "E_L^2-dR^2": (E**2 - dR**2, E**2 + dR**2),
        "dL^2-dR^2": (dL**2 - dR**2, dL**2 + dR**2),
        "E_L+dL": (E + dL, abs(E) + abs(dL)),
        "E_L-dL-U": (E - dL - U, abs(E) + abs(dL) + abs(U)),
    }


def near_singular_factors(params: ModelParams) -> list[tuple[str, float]]:
    return [
        (name, float(v))
        for name, (v, scale) in _factors(params).items()
        if abs(v) < FACTOR_RTOL * max(1.0, scale)
    ]


def _den(params: ModelParams, *names: str) -> float:
    table = _factors(params)
    out = 1.0
    for n in names:
        out *= _factor(n, *table[n])
    return out


def two_dot_singlet(p: ModelParams) -> complex:
    """Singlet amplitude, doubly occupied dot, opposite-spin input."""
    E, _, _, U, C = _ld(p)
    num = 2 * SQRT2 * U * (E - U) * C
    return complex(num / _den(p, "2E_L-U", "(E_L-U)^2-dL^2", "(E_L-U)^2-dR^2"))


def two_dot_triplet(p: ModelParams) -> complex:
    return 0j


def one_dot_same_spin_singlet(p: ModelParams) -> complex:
    """|up,s> amplitude for a spin-down dot and two spin-up inputs."""
    _, dL, _, U, C = _ld(p)
    num = -2 * SQRT2 * dL * U**2 * C
    return complex(num / _den(p, "E_L^2-dL^2", "dL^2-dR^2", "(E_L-U)^2-dL^2"))


def one_dot_same_spin_singlet_limit(p: ModelParams) -> complex:
    """``U -> infinity`` limit of :func:`one_dot_same_spin_singlet`."""
    _, dL, _, _, C = _ld(p)
    return complex(-2 * SQRT2 * dL * C / _den(p, "E_L^2-dL^2", "dL^2-dR^2"))


def tuneoff_residual(p: ModelParams) -> float:
    """Bracket whose zero switches off the |dn,s> channel (opposite-spin input, one dot electron)."""
    return float(_residual(p))


def _residual(p: ModelParams):
    E, dL, dR, U, _ = _ld(p)
    return (E * U - E**2 + dR**2) * (dL**2 - dR**2 + dL * U) + U**2 * dR**2


def tuneoff_residual_scale(p: ModelParams) -> float:
    """Sum of term magnitudes in the residual; the natural yardstick for "zero"."""
    E, dL, dR, U, _ = _ld(p)
    return float((abs(E * U) + E**2 + dR**2) * (dL**2 + dR**2 + abs(dL * U)) + U**2 * dR**2)


def one_dot_diff_spin_amplitudes(p: ModelParams) -> tuple[complex, complex, complex]:
    """``(singlet, triplet, flip)`` for a spin-down dot and input (dn at k, up at k')."""
    _, _, dR, U, C = _ld(p)
    common = _den(p, "E_L^2-dR^2", "dL^2-dR^2", "(E_L-U)^2-dR^2")
    singlet = SQRT2 * U * _residual(p) * C / (common * _den(p, "E_L+dL", "E_L-dL-U"))
    triplet = -SQRT2 * dR * U**2 * C / common
    flip = -triplet
    return complex(singlet), complex(triplet), complex(flip)


def closed_form_amplitudes(scenario: Scenario, params: ModelParams) -> dict[str, complex | None]:
    """Closed-form value per channel label; ``None`` where a factor is near zero.

    Only defined for ``eps_d == 0`` and occupied dots; otherwise empty.
    Opposite-spin inputs in the reversed order use ``delta_L -> -delta_L``
    (with the extra operator-exchange sign for the single-occupancy case).
    """
    if params.eps_d != 0 or scenario.occupancy is Occupancy.EMPTY:
        return {}
    up, dn = Spin.UP, Spin.DOWN
    spins = scenario.spins
    mirrored = params.with_(delta_L=-params.delta_L)

    def safe(fn, *args):
        try:
            return fn(*args)
        except NearSingularFactor:
            return None

    if scenario.occupancy is Occupancy.DOUBLE:
        if spins[0] == spins[1]:
            return {f"{spins[0].value}{spins[0].value}": 0j}
        src = params if spins == (dn, up) else mirrored
        return {"s": safe(two_dot_singlet, src), "t": two_dot_triplet(src)}

    if spins == (up, up):
        return {"up_s": safe(one_dot_same_spin_singlet, params), "up_t": 0j, "dn_upup": 0j}
    if spins == (dn, dn):
        return {"dn_dndn": 0j}
    sign, src = (1, params) if spins == (dn, up) else (-1, mirrored)
    vals = safe(one_dot_diff_spin_amplitudes, src)
    if vals is None:
        return {"dn_s": None, "dn_t": None, "up_dndn": None}
    s, t, f = (sign * v for v in vals)
    return {"dn_s": s, "dn_t": t, "up_dndn": f}


# --- tune-off solver --------------------------------------------------------


@dataclass(frozen=True)
class TuneoffRoot:
    delta_R: float
    x: float  # delta_R**2
    valid: bool  # delta_R > delta_L


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of ``a x^2 + b x + c`` without cancellation between ``-b`` and the root."""
    if a == 0:
        return [] if b == 0 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0:
        return [0.0]
    return sorted({q / a, c / q})


def tuneoff_roots(E_L: float, delta_L: float, U: float) -> list[TuneoffRoot]:
    """All ``delta_R > 0`` zeros of the tune-off residual, flagged by the filter condition.

    In ``x = delta_R**2`` the residual is the quadratic
    ``-x^2 + x (dL^2 + dL U - E_L U + E_L^2 + U^2) + (E_L U - E_L^2)(dL^2 + dL U)``.
    """
    if delta_L < 0:
        raise ValueError("delta_L must be non-negative")
    lin = delta_L**2 + delta_L * U - E_L * U + E_L**2 + U**2
    const = (E_L * U - E_L**2) * (delta_L**2 + delta_L * U)
    out = []
    for x in _quadratic_roots(-1.0, lin, const):
        if x > 0:
            d = math.sqrt(x)
            out.append(TuneoffRoot(d, x, d > delta_L))
    return out


def solve_tuneoff_delta_r(E_L: float, delta_L: float, U: float) -> list[float]:
    """Right splittings that zero the |dn,s> amplitude while keeping ``delta_R > delta_L``."""
    roots = [r.delta_R for r in tuneoff_roots(E_L, delta_L, U) if r.valid]
    if not roots:
        raise NoValidRoot(f"no delta_R > delta_L = {delta_L} solves the tune-off condition")
    return roots
