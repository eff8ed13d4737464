"""Randomized property checks of the engine: oracle equivalence, cancellations, symmetries.

Each check returns a :class:`CheckResult` carrying the worst deviation seen
and the tolerance it was held to. Relative deviations between two values
``a`` and ``b`` of one channel are taken against ``max(|a|, |b|)``, except
for channels that cancel (magnitude below ``1e-10`` of the scenario's
dominant scale), which are measured against that dominant scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cotunnel import closedform
from cotunnel.model import (
    FinalChannel,
    ModelParams,
    Occupancy,
    Scenario,
    Spin,
    catalog,
    final_channels,
    initial_state,
)
from cotunnel.tmatrix import (
    ChannelReport,
    amplitude_report,
    channel_paths,
    fourth_order_amplitude,
    partition_direct_exchange,
)

RTOL = 1e-12
ZERO_ATOL = 1e-14
CANCEL_FRACTION = 1e-10

# Channels whose printed closed form is not checked by run_all: the printed
# flip = -triplet relation disagrees with the exact engine by sqrt(2).
CLOSED_FORM_EXCLUDED = frozenset({"up_dndn"})

REFERENCE = ModelParams(E_L=-2.0, delta_L=0.5, delta_R=1.0, U=3.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""
    points: int = 0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"[{tag}] {self.name}: max deviation {self.max_deviation:.3e} (tol {self.tolerance:.0e}, {self.points} points)"
        return s + (f" -- {self.detail}" if self.detail else "")


@dataclass
class _Tracker:
    name: str
    tol: float
    worst: float = 0.0
    where: str = ""
    points: int = 0
    failures: list = field(default_factory=list)

    def see(self, dev: float, where: str):
        if not dev <= self.tol:  # NaN counts as failure
            self.failures.append(where)
        if dev > self.worst or math.isnan(dev):
            self.worst, self.where = dev, where

    def result(self) -> CheckResult:
        detail = f"first failure at {self.failures[0]}" if self.failures else ""
        return CheckResult(self.name, not self.failures, self.worst, self.tol, detail, self.points)


def random_points(samples: int, seed: int = 0) -> list[ModelParams]:
    """Uniform draws with E_L in [-5,-0.5], delta_L in (0,1), delta_R in (delta_L,2), U in [0.1,10]."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < samples:
        E_L = rng.uniform(-5.0, -0.5)
        dL = rng.uniform(0.0, 1.0)
        dR = rng.uniform(dL, 2.0)
        U = rng.uniform(0.1, 10.0)
        if dL > 0 and dR > dL:
            pts.append(ModelParams(E_L=float(E_L), delta_L=float(dL), delta_R=float(dR), U=float(U)))
    return pts


def dominant_scale(reports: list[ChannelReport]) -> float:
    """Largest channel magnitude; the largest single path if every channel cancels."""
    dom = max(abs(r.exact) for r in reports)
    path_max = max(
        (float(abs(p.amplitude)) for r in reports for ps in r.paths.values() for p in ps), default=0.0
    )
    return dom if dom > CANCEL_FRACTION * path_max else path_max


def rel_dev(a: complex, b: complex, scale: float) -> float:
    m = max(abs(a), abs(b))
    ref = m if m > CANCEL_FRACTION * scale else scale
    if ref == 0:
        return 0.0 if a == b else math.inf
    return abs(a - b) / ref


def evaluate(points, scenarios=None) -> list[dict[Scenario, list[ChannelReport]]]:
    scenarios = catalog() if scenarios is None else scenarios
    return [{sc: amplitude_report(sc, p) for sc in scenarios} for p in points]


# --- individual checks ------------------------------------------------------


def check_oracle(points, evaluated=None) -> CheckResult:
    evaluated = evaluate(points) if evaluated is None else evaluated
    tr = _Tracker("oracle equivalence (path sum vs resolvent product)", RTOL, points=len(points))
    for p, by_sc in zip(points, evaluated):
        for sc, reps in by_sc.items():
            scale = dominant_scale(reps)
            for r in reps:
                tr.see(rel_dev(r.exact, r.path_sum, scale), f"{sc}/{r.label} {p}")
    return tr.result()


def reference_signs(scenarios=None) -> dict[Scenario, int]:
    """Global sign between engine and closed form per scenario, fixed once at REFERENCE."""
    signs = {}
    for sc in catalog() if scenarios is None else scenarios:
        for r in amplitude_report(sc, REFERENCE):
            if r.closed_form is not None and abs(r.closed_form) > 0 and r.label not in CLOSED_FORM_EXCLUDED:
                signs[sc] = 1 if (r.exact / r.closed_form).real > 0 else -1
                break
    return signs


def check_closed_form(points, evaluated=None, excluded=CLOSED_FORM_EXCLUDED, signs=None) -> CheckResult:
    evaluated = evaluate(points) if evaluated is None else evaluated
    signs = reference_signs() if signs is None else signs
    tr = _Tracker("closed-form reproduction (one global sign per scenario)", RTOL, points=len(points))
    for p, by_sc in zip(points, evaluated):
        for sc, reps in by_sc.items():
            scale = dominant_scale(reps)
            g = signs.get(sc, 1)
            for r in reps:
                if r.label in excluded or sc.occupancy is Occupancy.EMPTY:
                    continue
                if r.closed_form is None:
                    tr.see(math.inf, f"{sc}/{r.label} closed form singular at {p}")
                    continue
                tr.see(rel_dev(r.exact, g * r.closed_form, scale), f"{sc}/{r.label} {p}")
    return tr.result()


CANCELLING = {
    "double:du": ("t",),
    "double:ud": ("t",),
    "double:uu": ("upup",),
    "double:dd": ("dndn",),
    "single:uu": ("up_t", "dn_upup"),
    "single:dd": ("dn_dndn",),
}


def _occupancy_dominant(by_sc, occupancy: Occupancy) -> float:
    return max(abs(r.exact) for sc, reps in by_sc.items() if sc.occupancy is occupancy for r in reps)


def check_cancellations(points, evaluated=None) -> CheckResult:
    """Channels that interfere to zero, relative to the largest amplitude of the same dot occupancy."""
    evaluated = evaluate(points) if evaluated is None else evaluated
    tr = _Tracker("destructive-interference zeros", RTOL, points=len(points))
    for p, by_sc in zip(points, evaluated):
        for sc, reps in by_sc.items():
            zeros = CANCELLING.get(sc.label, ())
            dom = _occupancy_dominant(by_sc, sc.occupancy)
            for r in reps:
                if r.label in zeros:
                    dev = abs(r.exact) / dom if dom > 0 else abs(r.exact) / ZERO_ATOL * RTOL
                    tr.see(dev, f"{sc}/{r.label} {p}")
    return tr.result()


def check_u_zero(points) -> CheckResult:
    tr = _Tracker("U=0 nullity (absolute)", ZERO_ATOL, points=len(points))
    for p in points:
        q = p.with_(U=0.0)
        for sc in catalog():
            ini, _ = initial_state(sc, q)
            for ch in final_channels(sc):
                tr.see(abs(fourth_order_amplitude(ini, ch, q)), f"{sc}/{ch.label} {q}")
    return tr.result()


def _subtotals(sc: Scenario, ch: FinalChannel, params: ModelParams):
    ini, _ = initial_state(sc, params)
    paths = channel_paths(ini, ch, params)
    states = ch.ket.states
    if len(states) == 2:
        direct, exchange = partition_direct_exchange([p for ps in paths.values() for p in ps], tuple(states))
    else:
        direct, exchange = partition_direct_exchange(paths[states[0]])
    return complex(sum(p.amplitude for p in direct)), complex(sum(p.amplitude for p in exchange))


def check_exchange_rule(points) -> CheckResult:
    """Exchange subtotal equals minus the direct subtotal with delta_R -> -delta_R."""
    tr = _Tracker("direct/exchange rule", RTOL, points=len(points))
    for p in points:
        mirrored = p.with_(delta_R=-p.delta_R)
        for sc in catalog():
            for ch in final_channels(sc):
                if ch.label.endswith("t"):
                    continue  # same product kets as the singlet
                d, x = _subtotals(sc, ch, p)
                d_m, _ = _subtotals(sc, ch, mirrored)
                tr.see(rel_dev(x, -d_m, max(abs(d), abs(x))), f"{sc}/{ch.label} {p}")
    return tr.result()


def _amplitudes(sc: Scenario, params: ModelParams) -> dict[str, complex]:
    ini, _ = initial_state(sc, params)
    return {ch.label: fourth_order_amplitude(ini, ch, params) for ch in final_channels(sc)}


def check_spin_flip(points) -> CheckResult:
    """<F f|T|F i> = <f|T|i> for the global up<->down map F, all scenarios and channels."""
    tr = _Tracker("spin-flip covariance", RTOL, points=len(points))
    for p in points:
        for sc in catalog():
            ini, _ = initial_state(sc, p)
            chans = final_channels(sc)
            vals = [fourth_order_amplitude(ini, ch, p) for ch in chans]
            flipped = [fourth_order_amplitude(ini.spin_flipped(), ch.ket.spin_flipped(), p) for ch in chans]
            scale = max(max(abs(v) for v in vals), _occupancy_scale(sc, p))
            for ch, a, b in zip(chans, vals, flipped):
                tr.see(rel_dev(a, b, scale), f"{sc}/{ch.label} {p}")
        # catalogued same-spin pairs of the doubly occupied dot
        up = _amplitudes(Scenario(Occupancy.DOUBLE, (Spin.UP, Spin.UP)), p)["upup"]
        dn = _amplitudes(Scenario(Occupancy.DOUBLE, (Spin.DOWN, Spin.DOWN)), p)["dndn"]
        tr.see(rel_dev(up, dn, _occupancy_scale(Scenario(Occupancy.DOUBLE, (Spin.DOWN, Spin.UP)), p)), f"double uu/dd {p}")
    return tr.result()


def _occupancy_scale(sc: Scenario, p: ModelParams) -> float:
    ref = Scenario(sc.occupancy, (Spin.DOWN, Spin.UP))
    return max(abs(v) for v in _amplitudes(ref, p).values())


def check_input_exchange(points) -> CheckResult:
    """(up,dn) amplitudes equal (dn,up) amplitudes at -delta_L times one sign per dot occupancy."""
    tr = _Tracker("input-exchange symmetry", RTOL, points=len(points))
    fixed: dict[Occupancy, int] = {}
    for p in points:
        mirrored = p.with_(delta_L=-p.delta_L)
        for occ in Occupancy:
            ud = _amplitudes(Scenario(occ, (Spin.UP, Spin.DOWN)), p)
            du = _amplitudes(Scenario(occ, (Spin.DOWN, Spin.UP)), mirrored)
            scale = max(abs(v) for v in ud.values())
            big = max(ud, key=lambda k: abs(ud[k]))
            g = 1 if (ud[big] / du[big]).real > 0 else -1
            if fixed.setdefault(occ, g) != g:
                tr.see(math.inf, f"{occ.value}: global sign changed at {p}")
            for k in ud:
                tr.see(rel_dev(ud[k], fixed[occ] * du[k], scale), f"{occ.value}/{k} {p}")
    res = tr.result()
    res.detail = (res.detail + " " if res.detail else "") + "signs " + ", ".join(
        f"{o.value}={s:+d}" for o, s in fixed.items()
    )
    return res


def check_coupling_scaling(points) -> CheckResult:
    """lambda^4 scaling and proportionality to conj(V_L)^2 V_R1 V_R2."""
    tr = _Tracker("coupling scaling", RTOL, points=len(points))
    rng = np.random.default_rng(12345)
    for p in points:
        a, b, c = (complex(*rng.uniform(-1.5, 1.5, 2)) for _ in range(3))
        lam = float(rng.uniform(0.2, 3.0))
        for sc in catalog():
            base = _amplitudes(sc, p)
            scale = max(max(abs(v) for v in base.values()), _occupancy_scale(sc, p))
            twice = _amplitudes(sc, p.with_(V_L=2.0, V_R1=2.0, V_R2=2.0))
            scaled = _amplitudes(sc, p.with_(V_L=lam, V_R1=lam, V_R2=lam))
            mixed = _amplitudes(sc, p.with_(V_L=a, V_R1=b, V_R2=c))
            factor = np.conj(a) ** 2 * b * c
            for k, v in base.items():
                # powers of two scale without rounding
                tr.see(0.0 if twice[k] == 16 * v else math.inf, f"{sc}/{k} lambda=2 {p}")
                tr.see(rel_dev(scaled[k], lam**4 * v, lam**4 * scale), f"{sc}/{k} lambda={lam} {p}")
                tr.see(rel_dev(mixed[k], factor * v, abs(factor) * scale), f"{sc}/{k} V=({a},{b},{c}) {p}")
    return tr.result()


EXPECTED_PATH_COUNTS = {
    ("double:du", "s"): 12,
    ("double:uu", "upup"): 4,
    ("single:uu", "up_s"): 16,
    ("single:uu", "dn_upup"): 4,
    ("single:du", "dn_s"): 12,
    ("single:du", "up_dndn"): 8,
}


def check_path_counts(params: ModelParams = REFERENCE) -> CheckResult:
    tr = _Tracker("virtual path counts", 0.0, points=1)
    for (label, ch_label), expected in EXPECTED_PATH_COUNTS.items():
        sc = Scenario.parse(label)
        ini, _ = initial_state(sc, params)
        ch = next(c for c in final_channels(sc) if c.label == ch_label)
        got = sum(len(v) for v in channel_paths(ini, ch, params).values())
        tr.see(float(abs(got - expected)), f"{label}/{ch_label}: {got} paths, expected {expected}")
    return tr.result()


def run_all(samples: int = 100, seed: int = 0) -> list[CheckResult]:
    points = random_points(samples, seed)
    evaluated = evaluate(points)
    return [
        check_path_counts(),
        check_oracle(points, evaluated),
        check_closed_form(points, evaluated),
        check_cancellations(points, evaluated),
        check_u_zero(points),
        check_exchange_rule(points),
        check_spin_flip(points),
        check_input_exchange(points),
        check_coupling_scaling(points),
    ]
