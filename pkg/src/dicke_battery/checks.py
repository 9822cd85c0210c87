"""Fast invariant checks behind ``dicke-battery selfcheck``."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from . import closed_form
from .model import BatteryParams, Drive, build_terms
from .propagate import evolve
from .spin_algebra import DickeBasis, build_ops, casimir


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def exact_bessel_series(order: int, x: float, terms: int = 60) -> float:
    """Power series in exact rational arithmetic; an oracle independent of float rounding."""
    xf = Fraction(x) / 2
    total = Fraction(0)
    num = xf ** order
    den = math.factorial(order)
    q = -xf * xf
    for k in range(terms):
        if k:
            num *= q
            den *= k * (k + order)
        total += num / den
    return float(total)


def check_commutators(sizes=(1, 2, 5, 50)) -> CheckResult:
    worst = 0.0
    for n in sizes:
        ops = build_ops(DickeBasis(n))
        x, y, z = ops.sx.toarray(), ops.sy.toarray(), ops.sz.toarray()
        for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
            worst = max(worst, np.abs(a @ b - b @ a - 1j * c).max() / max(1.0, np.abs(c).max()))
    return CheckResult("su2_commutators", worst <= 1e-12, f"max rel residual {worst:.2e}")


def check_bessel(perturb: float = 0.0) -> CheckResult:
    worst = 0.0
    for x in np.linspace(-5.0, 5.0, 41):
        for order in (0, 1):
            got = closed_form.bessel_j(order, x) * (1 + perturb) + perturb
            ref = exact_bessel_series(order, float(x))
            worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    return CheckResult("bessel_vs_series_oracle", worst <= 1e-12, f"max error {worst:.2e}")


def check_xi_residual() -> CheckResult:
    worst = 0.0
    for amp in (0.1, 0.5, 1.0, 1.5):
        for omega in (0.5, 1.0, 2.0):
            xi = closed_form.solve_xi(amp, omega)
            worst = max(worst, abs(closed_form.xi_residual(xi, amp, omega)))
    return CheckResult("xi_condition_residual", worst <= 1e-10, f"max residual {worst:.2e}")


def check_g_term_vanishes() -> CheckResult:
    worst = 0.0
    for n in (1, 2, 7, 200):
        for lam in (-2.0, -1.2, 0.5, 1.2):
            terms = build_terms(BatteryParams.from_lambda(lam, amp=0.0, n_atoms=n, drive=Drive.OFF))
            worst = max(worst, abs(terms.diag_internal[0] + n / 2))
    return CheckResult("g_term_vanishes_on_ground", worst <= 1e-12, f"max deviation {worst:.2e}")


def check_norm_drift(quick: bool = True) -> CheckResult:
    cases = [(1, 0.0, 1.0, 1.0), (20, 0.5, 1.0, 1.0)]
    if not quick:
        cases += [(100, -1.2, 1.0, 2 * math.pi / 8.0), (100, 1.2, 1.0, 2 * math.pi / 5.0)]
    worst = 0.0
    cas = 0.0
    for n, lam, amp, omega in cases:
        p = BatteryParams.from_lambda(lam, amp=amp, omega=omega, n_atoms=n)
        tr = evolve(p, 2 * math.pi / omega)
        worst = max(worst, tr.norm_drift)
        ops = build_ops(DickeBasis(n))
        s = n / 2
        cas = max(cas, abs(casimir(ops, tr.final_state) - s * (s + 1)) / (s * (s + 1)))
    ok = worst <= 1e-8 and cas <= 1e-8
    return CheckResult("norm_drift_and_casimir", ok, f"drift {worst:.2e}, casimir {cas:.2e}")


def check_static_exact() -> CheckResult:
    p = BatteryParams(amp=1.0, n_atoms=1, drive=Drive.STATIC)
    tr = evolve(p, 30.0, samples=np.linspace(0.5, 30.0, 60))
    ref = closed_form.static_energy(tr.times, 1.0)
    err = float(np.abs(tr.energies - ref).max())
    return CheckResult("static_charger_exact", err <= 1e-6, f"max error {err:.2e}")


def run_selfcheck(quick: bool = False, perturb_bessel: float = 0.0) -> list[CheckResult]:
    checks: list[Callable[[], CheckResult]] = [
        check_commutators,
        lambda: check_bessel(perturb_bessel),
        check_xi_residual,
        check_g_term_vanishes,
        lambda: check_norm_drift(quick),
    ]
    if not quick:
        checks.append(check_static_exact)
    return [c() for c in checks]
