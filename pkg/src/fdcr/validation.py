"""Oracle-agreement checks behind ``fdcr validate``, plus a random scenario generator.

Each check compares one analytic path with an independent one (Monte Carlo,
quadrature, grid search, finite differences) and yields a :class:`Check`.
Sizes here are smaller than in the test suite so the command runs in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import (
    design_improper,
    feasibility_report,
    grid_search_design,
    improper_power_cap,
    is_decreasing_on_cap,
    su_outage_cx_derivative,
)
from .montecarlo import McConfig, estimate_pu_outage, estimate_su_outage
from .outage import pu_outage_exact, pu_outage_proper, pu_outage_upper, su_outage
from .params import SystemParams, constraint_constants, db_to_linear
from .rates import SignalDesign


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def random_scenario(rng: np.random.Generator) -> SystemParams:
    """A random valid scenario spread around the reference operating point."""
    u = rng.uniform
    return SystemParams(
        p=tuple(u(0.5, 2.0, 2)),
        gbar_p=tuple(db_to_linear(u(10.0, 40.0, 2))),
        ibar_p=tuple(db_to_linear(u(-5.0, 10.0, 2))),
        ibar_s=tuple(db_to_linear(u(-5.0, 20.0, 2))),
        vbar_p=tuple(db_to_linear(u(-10.0, 15.0, 2))),
        gbar_s=db_to_linear(u(0.0, 40.0)),
        r0_p=tuple(u(0.1, 1.5, 2)),
        r0_s=u(0.1, 1.5),
        o_p=tuple(10.0 ** u(-3.0, np.log10(0.2), 2)),
        ps_max=10.0 ** u(-1.0, 1.0),
    )


def random_cap_scenario(rng: np.random.Generator, i: int) -> SystemParams:
    """Random scenario whose node-i constraint admits positive power (Upsilon > 0)."""
    while True:
        params = random_scenario(rng)
        if constraint_constants(params, i).upsilon_ > 0:
            return params


def _within(closed, est, k=3.0):
    return abs(closed - est.mean) <= k * est.std_err


def check_su_closed_vs_mc(samples=200_000, seed=11) -> Check:
    params = SystemParams.baseline()
    worst = 0.0
    ok = True
    for n, (ps, cx) in enumerate([(0.1, 0.0), (0.5, 0.5), (1.0, 0.9)]):
        d = SignalDesign(ps, cx)
        est = estimate_su_outage(params, d, McConfig(samples, seed + n))
        z = abs(su_outage(params, d) - est.mean) / est.std_err
        worst = max(worst, z)
        ok &= z <= 3.0
    return Check("su_outage vs Monte Carlo", ok, f"max |z| = {worst:.2f} (limit 3)")


def check_pu_proper_vs_mc(samples=200_000, seed=21) -> Check:
    params = SystemParams.baseline()
    worst = 0.0
    ok = True
    for n, ps in enumerate([0.0, 0.5, 1.0]):
        est = estimate_pu_outage(params, 1, SignalDesign(ps, 0.0), McConfig(samples, seed + n))
        z = abs(pu_outage_proper(params, 1, ps) - est.mean) / est.std_err
        worst = max(worst, z)
        ok &= z <= 3.0
    return Check("pu_outage_proper vs Monte Carlo", ok, f"max |z| = {worst:.2f} (limit 3)")


def check_bound_dominance() -> Check:
    ok = True
    worst_gap = np.inf
    for is_db in (4.0, 8.0, 13.0):
        for g_db in range(10, 41, 5):
            params = SystemParams.baseline(gbar_p=db_to_linear(g_db), ibar_s=db_to_linear(is_db))
            d = SignalDesign(1.0, 0.5)
            up = pu_outage_upper(params, 1, d)
            ex = pu_outage_exact(params, 1, d).value
            ok &= up >= ex
            worst_gap = min(worst_gap, up - ex)
    return Check("Jensen bound >= quadrature", ok, f"min(upper - exact) = {worst_gap:.3e}")


def check_exact_vs_mc(samples=200_000, seed=31) -> Check:
    params = SystemParams.baseline()
    d = SignalDesign(1.0, 0.5)
    est = estimate_pu_outage(params, 1, d, McConfig(samples, seed))
    z = abs(pu_outage_exact(params, 1, d).value - est.mean) / est.std_err
    return Check("pu_outage_exact vs Monte Carlo", z <= 3.0, f"|z| = {z:.2f} (limit 3)")


def check_design_vs_grid(count=20, grid=401, seed=41) -> Check:
    rng = np.random.default_rng(seed)
    ok = True
    worst = 0.0
    for _ in range(count):
        params = random_scenario(rng)
        best = design_improper(params)
        ref = grid_search_design(params, grid, grid)
        tol = max(1e-3, ref.meta.get("neighbor_variation", 0.0))
        worst = max(worst, abs(best.outage - ref.outage) / tol)
        ok &= abs(best.outage - ref.outage) <= tol
        if not best.silent:
            ok &= max(feasibility_report(params, best)) <= 1e-9
    return Check(
        "Algorithm vs grid oracle", ok, f"{count} scenarios, worst |diff|/tol = {worst:.3f}"
    )


def check_derivative(count=20, seed=51) -> Check:
    rng = np.random.default_rng(seed)
    ok = True
    worst = 0.0
    for n in range(count):
        i = 1 + n % 2
        params = random_cap_scenario(rng, i)
        cx = rng.uniform(0.05, 0.95)
        d = su_outage_cx_derivative(params, i, cx)
        h = 1e-6
        f = lambda c: su_outage(params, SignalDesign(improper_power_cap(params, i, c), c))
        fd = (f(cx + h) - f(cx - h)) / (2 * h)
        ok &= (d < 0) == is_decreasing_on_cap(params, i)
        if abs(fd) > 1e-10:
            worst = max(worst, abs(d - fd) / abs(fd))
    ok &= worst <= 1e-4
    return Check("derivative sign and finite differences", ok, f"max rel err = {worst:.2e}")


ALL_CHECKS = (
    check_su_closed_vs_mc,
    check_pu_proper_vs_mc,
    check_bound_dominance,
    check_exact_vs_mc,
    check_design_vs_grid,
    check_derivative,
)


def run_all() -> list[Check]:
    return [fn() for fn in ALL_CHECKS]
