"""SU and PU outage probabilities: closed forms, conditionals, bound and quadrature.

The closed forms accept array-valued designs. :func:`pu_outage_exact` is
scalar and returns an :class:`OutageValue` carrying quadrature metadata.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, NumericError, NumericWarning
from .params import SystemParams, node_indices, snr_threshold
from .rates import SignalDesign

KINDS = ("closed_form", "conditional", "upper_bound", "quadrature", "monte_carlo")

CLAMP_TOL = 1e-12
QUAD_RTOL = 1e-6
QUAD_MAX_CHECK_ORDER = 256
T_SATURATE = 1e100


@dataclass(frozen=True)
class OutageValue:
    value: float
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown outage kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise NumericError(f"outage value {self.value!r} outside [0, 1]")

    def __float__(self):
        return float(self.value)


def as_probability(value):
    """Clamp roundoff into [0, 1]; a larger excursion is a bug and raises."""
    v = np.asarray(value, dtype=float)
    if np.any(np.isnan(v)) or np.any(v < -CLAMP_TOL) or np.any(v > 1.0 + CLAMP_TOL):
        raise NumericError(f"probability out of range: {value!r}")
    v = np.clip(v, 0.0, 1.0)
    return float(v) if v.ndim == 0 else v


def _su_exponent(params: SystemParams, ps, cx):
    # psi_s / (1 - cx^2), rewritten so that cx = 1 is a regular point
    gamma_s = snr_threshold(params.r0_s)
    w = 1.0 - np.square(cx)
    with np.errstate(over="ignore", divide="ignore"):
        return gamma_s / ((np.sqrt(1.0 + w * gamma_s) + 1.0) * ps * params.gbar_s)


def _check_ps(ps):
    ps = np.asarray(ps, dtype=float)
    if np.any(ps <= 0):
        raise DomainError("SU outage needs ps > 0")
    return ps


def su_outage_conditional(params: SystemParams, d: SignalDesign, i_p1, i_p2):
    """SU outage given the instantaneous PU interference CNRs at the SU receiver."""
    ps = _check_ps(d.ps)
    load = params.p[0] * np.asarray(i_p1) + params.p[1] * np.asarray(i_p2) + 1.0
    return as_probability(-np.expm1(-load * _su_exponent(params, ps, d.cx)))


def su_outage(params: SystemParams, d: SignalDesign):
    """SU outage averaged over Rayleigh fading.

    Uses ``1 - exp(-t) / prod_j(1 + p_j Ibar_pj t)`` with
    ``t = Psi_s / (1 - cx^2)``; this is the usual closed form with the common
    ``(1 - cx^2)^2`` factor cancelled, so ``cx = 1`` needs no special case.
    """
    ps = _check_ps(d.ps)
    # beyond T_SATURATE the outage is 1 to double precision; cap t to avoid overflow
    t = np.minimum(_su_exponent(params, ps, d.cx), T_SATURATE)
    q1 = params.p[0] * params.ibar_p[0]
    q2 = params.p[1] * params.ibar_p[1]
    denom = (1.0 + q1 * t) * (1.0 + q2 * t)
    # 1 - e^{-t}/denom = (denom - 1 + (1 - e^{-t})) / denom
    num = (q1 + q2) * t + q1 * q2 * t * t - np.expm1(-t)
    return as_probability(num / denom)


def _pu_exponent(params: SystemParams, i: int, ps, cx, i_s_j, v_p_j):
    # b * Psi_pi(c / b) with b = p_j v + ps I + 1, c = ps I cx
    ii, jj = node_indices(i)
    gamma_p = snr_threshold(params.r0_p[ii])
    intf = ps * i_s_j
    b = params.p[jj] * v_p_j + intf + 1.0
    c = intf * cx
    r = gamma_p * (b - c) * (b + c)
    return r / ((np.sqrt(b * b + r) + b) * params.p[ii] * params.gbar_p[ii])


def pu_outage_conditional(params: SystemParams, i: int, d: SignalDesign, i_s_j, v_p_j):
    """PU node-i outage given SU interference and partner RSI CNRs at node j."""
    e = _pu_exponent(params, i, d.ps, d.cx, np.asarray(i_s_j, float), np.asarray(v_p_j, float))
    return as_probability(-np.expm1(-e))


def pu_outage_proper(params: SystemParams, i: int, ps):
    """Exact PU outage for a proper (cx = 0) SU signal."""
    ii, jj = node_indices(i)
    ps = np.asarray(ps, dtype=float)
    if np.any(ps < 0):
        raise DomainError("ps must be >= 0")
    psi0 = _pu_exponent(params, i, 0.0, 0.0, 0.0, 0.0)
    a = ps * params.ibar_s[jj] * psi0
    v = params.p[jj] * params.vbar_p[jj] * psi0
    # 1 - e^{-psi0} / ((1 + a)(1 + v)), arranged to keep small outages accurate
    num = a + v + a * v - np.expm1(-psi0)
    return as_probability(num / ((1.0 + a) * (1.0 + v)))


def pu_outage_upper(params: SystemParams, i: int, d: SignalDesign):
    """Jensen upper bound on PU node-i outage (conditional form at the means)."""
    _, jj = node_indices(i)
    e = _pu_exponent(params, i, d.ps, d.cx, params.ibar_s[jj], params.vbar_p[jj])
    return as_probability(-np.expm1(-e))


@lru_cache(maxsize=None)
def laguerre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Laguerre nodes and weights (weight ``exp(-x)`` on [0, inf)).

    Golub-Welsch on the Laguerre Jacobi matrix, which stays finite at orders
    where the three-term-recurrence root polishers overflow. The returned
    arrays are read-only so the cached tables can be shared.
    """
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    k = np.arange(order, dtype=float)
    nodes, vecs = eigh_tridiagonal(2.0 * k + 1.0, k[1:])
    weights = vecs[0] ** 2
    weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _exp_rule(mean: float, order: int):
    if mean == 0:
        return np.zeros(1), np.ones(1)
    x, w = laguerre_rule(order)
    return mean * x, w


def _pu_quadrature(params, i, ps, cx, order):
    _, jj = node_indices(i)
    xi, wi = _exp_rule(params.ibar_s[jj], order)
    xv, wv = _exp_rule(params.vbar_p[jj], order)
    e = _pu_exponent(params, i, ps, cx, xi[:, None], xv[None, :])
    return float(wi @ (-np.expm1(-e)) @ wv)


def pu_outage_exact(params: SystemParams, i: int, d: SignalDesign, order: int = 64) -> OutageValue:
    """Exact PU node-i outage by tensor-product Gauss-Laguerre quadrature.

    The estimate at ``order`` is checked against ``2 * order``; while the
    relative change exceeds ``QUAD_RTOL`` the order keeps doubling. If that
    still fails with the coarser order at ``QUAD_MAX_CHECK_ORDER`` or more, a
    :class:`NumericWarning` is emitted and ``meta["converged"]`` is False. The
    finest estimate computed is returned.
    """
    if order < 8:
        raise DomainError("quadrature order must be >= 8")
    ps, cx = float(d.ps), float(d.cx)
    n = order
    coarse = _pu_quadrature(params, i, ps, cx, n)
    while True:
        fine = _pu_quadrature(params, i, ps, cx, 2 * n)
        rel = abs(fine - coarse) / abs(fine) if fine != 0 else abs(coarse)
        converged = rel <= QUAD_RTOL
        if converged or n >= QUAD_MAX_CHECK_ORDER:
            break
        n *= 2
        coarse = fine
    if not converged:
        warnings.warn(
            f"PU outage quadrature did not converge: relative change {rel:.3g} "
            f"between orders {n} and {2 * n}",
            NumericWarning,
            stacklevel=2,
        )
    meta = {"order": order, "order_used": 2 * n, "rel_change": rel, "converged": converged}
    return OutageValue(as_probability(fine), "quadrature", meta)


def su_outage_limit_cx1(params: SystemParams, ps: float) -> float:
    """Maximally improper SU outage written out directly (``cx = 1``)."""
    if ps <= 0:
        raise DomainError("ps must be > 0")
    t = snr_threshold(params.r0_s) / (2.0 * ps * params.gbar_s)
    prod = math.prod(1.0 + params.p[k] * params.ibar_p[k] * t for k in (0, 1))
    return as_probability(1.0 - math.exp(-t) / prod)
