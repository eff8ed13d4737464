"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly as ``python3 tests/test_acceptance.py``.
"""

import io
import math
import sys
import time

import pytest

from cotunnel import cli, closedform, verify
from cotunnel.model import Occupancy, Scenario, catalog, final_channels, initial_state
from cotunnel.tmatrix import amplitude_report, fourth_order_amplitude

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover
    ACCEPTANCE_LINES = []

SAMPLES, SEED = 100, 0


def record(number: int, title: str, passed: bool, detail: str):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def grid():
    start = time.perf_counter()
    points = verify.random_points(SAMPLES, SEED)
    evaluated = verify.evaluate(points)
    return points, evaluated, time.perf_counter() - start


def test_criterion_01_oracle_equivalence(grid):
    points, evaluated, elapsed = grid
    res = verify.check_oracle(points, evaluated)
    ok = res.passed and elapsed < 10.0 and len(points) >= 100
    record(1, "oracle equivalence", ok, f"max rel dev {res.max_deviation:.2e} over {len(points)} points x 12 scenarios, {elapsed:.2f} s (limit 10 s)")


def test_criterion_02_closed_form_reproduction(grid):
    points, evaluated, _ = grid
    # every closed-form channel, including the spin-flip channel
    res = verify.check_closed_form(points, evaluated, excluded=frozenset())
    rest = verify.check_closed_form(points, evaluated)
    signs = sorted((s.label, g) for s, g in verify.reference_signs().items())
    detail = (
        f"max rel dev {res.max_deviation:.2e} (tol 1e-12); without {'/'.join(sorted(verify.CLOSED_FORM_EXCLUDED))} "
        f"{rest.max_deviation:.2e}; signs {signs}; {res.detail}"
    )
    record(2, "closed-form reproduction", res.passed, detail)


def test_criterion_03_cancellations(grid):
    points, evaluated, _ = grid
    res = verify.check_cancellations(points, evaluated)
    worst_zero = 0.0
    for p in points:
        q = p.with_(U=0.0)
        for label, chans in verify.CANCELLING.items():
            sc = Scenario.parse(label)
            ini, _ = initial_state(sc, q)
            for ch in final_channels(sc):
                if ch.label in chans:
                    worst_zero = max(worst_zero, abs(fourth_order_amplitude(ini, ch, q)))
    ok = res.passed and worst_zero < verify.ZERO_ATOL
    record(3, "cancellation claims", ok, f"max |cancelled|/dominant {res.max_deviation:.2e} (tol 1e-12); at U=0 max {worst_zero:.1e}")


def test_criterion_04_u_zero_nullity(grid):
    points, _, _ = grid
    res = verify.check_u_zero(points)
    record(4, "U=0 nullity", res.passed, f"max |amplitude| {res.max_deviation:.2e} (tol 1e-14)")


def test_criterion_05_path_counts():
    res = verify.check_path_counts()
    record(5, "path counts 12/4/16/4/12/8", res.passed, res.detail or "all groups match")


def test_criterion_06_exchange_rule(grid):
    points, _, _ = grid
    res = verify.check_exchange_rule(points)
    record(6, "exchange rule", res.passed, f"max rel dev {res.max_deviation:.2e} (tol 1e-12)")


def test_criterion_07_tuneoff():
    roots = closedform.solve_tuneoff_delta_r(-2.0, 0.5, 3.0)
    near = [r for r in roots if abs(r - 0.93851) < 1e-4]
    ratio = math.inf
    if near:
        sc = Scenario.parse("single:du")
        reps = {r.label: r for r in amplitude_report(sc, verify.REFERENCE.with_(delta_R=near[0]))}
        ratio = abs(reps["dn_s"].exact) / abs(reps["dn_t"].exact)
    big = closedform.solve_tuneoff_delta_r(-2.0, 0.5, 1e6)
    limit_dev = min(abs(r * r - 2.0 * 0.5) for r in big)
    ok = bool(near) and ratio < 1e-10 and limit_dev < 1e-4
    record(7, "tune-off", ok, f"root {near[0] if near else None!r}, |dn_s|/|dn_t| {ratio:.1e}; U=1e6 |dR^2-|E_L|dL| {limit_dev:.1e}")


def test_criterion_08_asymptotics():
    U = 1e6
    p = verify.REFERENCE.with_(U=U)
    sc2 = Scenario.parse("double:du")
    ini, _ = initial_state(sc2, p)
    singlet = fourth_order_amplitude(ini, final_channels(sc2)[0], p)
    dev2 = abs(abs(singlet) * U**3 - 2 * math.sqrt(2))
    sc1 = Scenario.parse("single:uu")
    ini, _ = initial_state(sc1, p)
    same = fourth_order_amplitude(ini, final_channels(sc1)[0], p)
    limit = verify.reference_signs([sc1])[sc1] * closedform.one_dot_same_spin_singlet_limit(p)
    dev1 = abs(same - limit)
    ok = dev2 < 1e-4 and dev1 < 1e-4
    record(8, "large-U asymptotics", ok, f"|singlet*U^3 - 2sqrt2| {dev2:.1e}, |same-spin - limit| {dev1:.1e} (tol 1e-4)")


def test_criterion_09_symmetries(grid):
    points, _, _ = grid
    results = [verify.check_spin_flip(points), verify.check_input_exchange(points), verify.check_coupling_scaling(points)]
    detail = "; ".join(f"{r.name} {r.max_deviation:.1e}" for r in results)
    record(9, "symmetries", all(r.passed for r in results), detail)


def _run(argv):
    buf = io.StringIO()
    code = cli.main(argv, out=buf)
    return code, buf.getvalue()


def test_criterion_10_cli_contract(monkeypatch):
    code, _ = _run(["verify", "--samples", str(SAMPLES)])
    repeat = {
        "amplitude json": ["amplitude", "--scenario", "single:du", "--format", "json"],
        "sweep csv": ["sweep", "--sweep", "U:0:10:11", "--format", "csv"],
        "verify json": ["verify", "--samples", "5", "--seed", "7", "--format", "json"],
    }
    identical = all(_run(a) == _run(a) for a in repeat.values())
    exits = {
        0: _run(["amplitude"])[0],
        2: _run(["amplitude", "--dL", "1.5"])[0],
        3: _run(["amplitude", "--scenario", "single:du", "--EL", "-0.5"])[0],
        4: _run(["tuneoff", "--dL", "5", "--U", "-3"])[0],
    }
    monkeypatch.setattr(closedform, "two_dot_singlet", lambda p: 1.01 * verify.closedform.one_dot_same_spin_singlet(p))
    exits[1] = _run(["verify", "--samples", "3"])[0]
    ok = code == 0 and identical and all(k == v for k, v in exits.items())
    record(10, "CLI contract", ok, f"verify exit {code}, repeat outputs identical {identical}, exit table {exits}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
