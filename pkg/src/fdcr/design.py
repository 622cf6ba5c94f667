"""SU signal design: proper power allocation and the improper (ps, cx) optimizer.

The improper design works on the Jensen-bound form of each PU constraint,
which is equivalent to ``ps <= cap_i(cx)``. The caps grow with ``cx``, so the
feasible power ``min(ps_max, cap_1, cap_2)`` is piecewise over at most four
circularity intervals. Within an interval the SU outage along the active limit
is monotone in ``cx``, so only interval endpoints are candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .outage import pu_outage_proper, pu_outage_upper, su_outage
from .params import SystemParams, constraint_constants, node_indices, snr_threshold
from .rates import SignalDesign, psi_p

DEDUP_TOL = 1e-12
LIMIT_NAMES = ("budget", "cap-1", "cap-2")


@dataclass(frozen=True)
class Breakpoints:
    """Ordered circularity grid ``0 = c_0 < ... < c_{k+1} = 1``.

    ``provenance[z]`` names the intersection(s) behind interior point ``z``:
    ``budget-1``, ``budget-2`` (cap vs. power budget) or ``cap-cap``.
    """

    points: tuple
    provenance: tuple = ()

    def __post_init__(self):
        pts = self.points
        if pts[0] != 0.0 or pts[-1] != 1.0 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise NumericError(f"breakpoints must increase strictly from 0 to 1: {pts}")
        if len(pts) - 2 > 3 or len(self.provenance) != len(pts) - 2:
            raise NumericError(f"bad breakpoint structure: {pts}, {self.provenance}")

    @property
    def intervals(self):
        return list(zip(self.points[:-1], self.points[1:]))


@dataclass(frozen=True)
class Candidate:
    ps: float
    cx: float
    outage: float
    interval: tuple
    active: str


@dataclass(frozen=True)
class DesignOutcome:
    ps_star: float
    cx_star: float
    outage: float
    silent: bool
    candidates: tuple = ()
    meta: dict = field(default_factory=dict)


def _silent(reason: str, **meta) -> DesignOutcome:
    return DesignOutcome(0.0, 0.0, 1.0, True, (), {"reason": reason, **meta})


def _outage_at(params, ps, cx) -> float:
    return 1.0 if ps <= 0 else float(su_outage(params, SignalDesign(ps, cx)))


# --- proper signaling --------------------------------------------------------


def proper_power_cap(params: SystemParams, i: int) -> float:
    """Largest SU power keeping the exact proper-signaling PU outage at ``o_p[i]``.

    Returns 0 when the SU must stay silent and ``inf`` when node i's
    constraint never binds (zero target rate or no SU interference).
    """
    ii, jj = node_indices(i)
    psi0 = float(psi_p(params, i, 0.0))
    keep = 1.0 - params.o_p[ii]
    rsi = params.p[jj] * params.vbar_p[jj] * psi0 + 1.0
    num = math.exp(-psi0) - keep * rsi
    if psi0 == 0 or params.ibar_s[jj] == 0:
        return math.inf if num > 0 else 0.0
    return max(0.0, num / (params.ibar_s[jj] * psi0 * keep * rsi))


def design_proper(params: SystemParams) -> DesignOutcome:
    caps = (proper_power_cap(params, 1), proper_power_cap(params, 2))
    ps = min(*caps, params.ps_max)
    if ps <= 0:
        return _silent("proper power cap is zero", caps=caps)
    return DesignOutcome(ps, 0.0, _outage_at(params, ps, 0.0), False, (), {"caps": caps})


# --- improper signaling: caps and their intersections -----------------------


def improper_power_cap(params: SystemParams, i: int, cx):
    """Largest SU power with the bounded node-i PU outage at most ``o_p[i]``.

    Positive root of ``Gamma (1 - cx^2) S^2 + 2 Lambda S - Upsilon = 0`` in
    ``S = Ibar_sj * ps``. Zero when ``Upsilon <= 0``; ``inf`` where the
    constraint is inactive (``cx = 1`` with ``Lambda <= 0``, ``Gamma = 0`` or a
    vanishing interference channel). Broadcasts over ``cx``.
    """
    _, jj = node_indices(i)
    cx = np.asarray(cx, dtype=float)
    if np.any(~(cx >= 0)) or np.any(~(cx <= 1)):
        raise DomainError(f"cx must lie in [0, 1], got {cx!r}")
    c = constraint_constants(params, i)
    lam, ups, gam = c.lambda_, c.upsilon_, c.gamma_p
    a = params.ibar_s[jj]
    if ups <= 0:
        out = np.zeros_like(cx)
    else:
        quad = gam * (1.0 - cx * cx)
        root = np.sqrt(lam * lam + quad * ups)
        with np.errstate(divide="ignore", invalid="ignore"):
            if lam > 0:
                s = ups / (lam + root)
            else:
                s = np.where(quad > 0, (root - lam) / quad, math.inf)
            out = s / a if a > 0 else np.full_like(cx, math.inf)
    return float(out) if out.ndim == 0 else out


def _positive_upsilon(params, i):
    c = constraint_constants(params, i)
    if c.upsilon_ <= 0:
        raise DomainError(f"node {i}: Upsilon <= 0, no positive power is feasible")
    return c


def budget_intersection(params: SystemParams, i: int):
    """Circularity where cap_i meets ``ps_max``, or None if they do not cross."""
    c = _positive_upsilon(params, i)
    if not (improper_power_cap(params, i, 0.0) < params.ps_max < improper_power_cap(params, i, 1.0)):
        return None
    _, jj = node_indices(i)
    s = params.ps_max * params.ibar_s[jj]
    return math.sqrt(1.0 + (2.0 * s * c.lambda_ - c.upsilon_) / (c.gamma_p * s * s))


def _cap_at_one(params: SystemParams, i: int) -> tuple:
    """Sort key for cap_i as ``cx -> 1``, ordering caps that diverge there.

    With ``w = 1 - cx^2``, a cap stays finite when ``Lambda > 0``, grows like
    ``w^(-1/2)`` when ``Lambda = 0`` and like ``w^(-1)`` when ``Lambda < 0``;
    keys compare the growth order first, then the leading coefficient.
    """
    c = _positive_upsilon(params, i)
    _, jj = node_indices(i)
    a = params.ibar_s[jj]
    if a == 0 or c.gamma_p == 0:
        return (3, 0.0)
    if c.lambda_ > 0:
        return (0, float(improper_power_cap(params, i, 1.0)))
    if c.lambda_ == 0:
        return (1, math.sqrt(c.upsilon_ / c.gamma_p) / a)
    return (2, -2.0 * c.lambda_ / (c.gamma_p * a))


def cap_intersection(params: SystemParams):
    """Circularity where cap_1 and cap_2 cross inside (0, 1), or None.

    Eliminating ``ps`` between the two quadratics gives ``1 - cx^2 = kappa``
    in closed form; ``a_i`` is the SU interference CNR seen by constraint i.
    """
    c1, c2 = _positive_upsilon(params, 1), _positive_upsilon(params, 2)
    lo = [improper_power_cap(params, k, 0.0) for k in (1, 2)]
    hi = [_cap_at_one(params, k) for k in (1, 2)]
    swaps = (lo[0] < lo[1] and hi[0] > hi[1]) or (lo[0] > lo[1] and hi[0] < hi[1])
    if not swaps:
        return None
    g1, l1, u1, a1 = c1.gamma_p, c1.lambda_, c1.upsilon_, params.ibar_s[1]
    g2, l2, u2, a2 = c2.gamma_p, c2.lambda_, c2.upsilon_, params.ibar_s[0]
    den = (g2 * u1 * a2 * a2 - g1 * u2 * a1 * a1) ** 2
    if den == 0:
        return None
    kappa = 4.0 * a1 * a2 * (l1 * g2 * a2 - l2 * g1 * a1) * (l1 * u2 * a1 - l2 * u1 * a2) / den
    if not -DEDUP_TOL <= kappa <= 1.0 + DEDUP_TOL:
        raise NumericError(f"cap intersection kappa={kappa!r} outside [0, 1]")
    return math.sqrt(1.0 - min(max(kappa, 0.0), 1.0))


def breakpoints(params: SystemParams) -> Breakpoints:
    ups = [constraint_constants(params, k).upsilon_ > 0 for k in (1, 2)]
    found = []
    for k in (1, 2):
        if ups[k - 1]:
            r = budget_intersection(params, k)
            if r is not None:
                found.append((r, f"budget-{k}"))
    if all(ups):
        r = cap_intersection(params)
        if r is not None:
            found.append((r, "cap-cap"))
    merged = []
    for r, tag in sorted(found):
        if not 0.0 < r < 1.0:
            continue
        if merged and r - merged[-1][0] <= DEDUP_TOL:
            merged[-1] = (merged[-1][0], merged[-1][1] + "+" + tag)
        else:
            merged.append((r, tag))
    return Breakpoints(
        (0.0, *(r for r, _ in merged), 1.0), tuple(tag for _, tag in merged)
    )


# --- monotonicity along a cap ------------------------------------------------


def is_decreasing_on_cap(params: SystemParams, i: int) -> bool:
    """Whether the SU outage falls with ``cx`` while ``ps`` rides on cap_i."""
    c = _positive_upsilon(params, i)
    if c.lambda_ <= 0:
        return True
    return snr_threshold(params.r0_s) < c.gamma_p * c.upsilon_ / c.lambda_**2


def su_outage_cx_derivative(params: SystemParams, i: int, cx: float) -> float:
    """Analytic d(SU outage)/d(cx) along ``ps = cap_i(cx)`` for ``0 < cx < 1``.

    Writes the outage through ``G = ps * gbar_s * sqrt(1 - cx^2)`` and
    ``Y = sqrt(1 - cx^2) / (sqrt(1 + (1 - cx^2) Gamma_s) - 1)`` and applies
    the chain rule. The sign is that of
    ``Lambda / sqrt(Lambda^2 + Phi) - 1 / sqrt(1 + (1 - cx^2) Gamma_s)``.
    """
    if not 0.0 < cx < 1.0:
        raise DomainError(f"cx must lie in (0, 1), got {cx!r}")
    c = _positive_upsilon(params, i)
    _, jj = node_indices(i)
    ps = improper_power_cap(params, i, cx)
    if not math.isfinite(ps):
        raise DomainError(f"cap_{i} is unbounded; derivative undefined")
    lam, ups, gam = c.lambda_, c.upsilon_, c.gamma_p
    gamma_s = snr_threshold(params.r0_s)
    w = 1.0 - cx * cx
    phi = gam * w * ups
    root = math.sqrt(lam * lam + phi)
    rs = math.sqrt(1.0 + w * gamma_s)
    rs_m1 = w * gamma_s / (rs + 1.0)
    big_g = ps * params.gbar_s * math.sqrt(w)
    big_y = math.sqrt(w) / rs_m1
    gy = big_g * big_y
    q = [params.p[k] * params.ibar_p[k] for k in (0, 1)]
    theta = (q[0] + gy) * (q[1] + gy)
    t = (gy * (q[0] * q[1] + theta - gy * gy) + theta) / theta**2 * math.exp(-1.0 / gy)
    # sqrt(Lambda^2 + Phi) - Lambda, cancellation-free
    lift = phi / (root + lam) if lam > 0 else root - lam
    scale = t * cx * params.gbar_s * lift / (gam * params.ibar_s[jj] * rs_m1 * w)
    return scale * (lam / root - 1.0 / rs)


# --- optimizers ----------------------------------------------------------------


def _limits(params, cx):
    return (params.ps_max, improper_power_cap(params, 1, cx), improper_power_cap(params, 2, cx))


def design_improper(params: SystemParams) -> DesignOutcome:
    """Optimal (ps, cx) under the bounded PU constraints, by interval endpoints.

    Ties in the active-limit argmin prefer the budget, then node 1, then
    node 2. ``meta["diagnostics"]`` lists intervals whose active limit at an
    endpoint differs from the one found at the midpoint.
    """
    consts = [constraint_constants(params, k) for k in (1, 2)]
    bad = [k for k in (1, 2) if consts[k - 1].upsilon_ <= 0]
    if bad:
        return _silent("Upsilon <= 0", nodes=tuple(bad))
    bp = breakpoints(params)
    decreasing = {k: is_decreasing_on_cap(params, k) for k in (1, 2)}
    raw = []
    diagnostics = []
    for a, b in bp.intervals:
        mid_limits = _limits(params, 0.5 * (a + b))
        m = int(np.argmin(mid_limits))
        for edge in (a, b):
            lim = _limits(params, edge)
            if lim[m] > min(lim) * (1.0 + 1e-9) + 1e-12:
                diagnostics.append({"interval": (a, b), "edge": edge, "limits": lim, "active": m})
        if m == 0:
            ps, cx = params.ps_max, a
        else:
            cx = b if decreasing[m] else a
            # the min guards feasibility should a crossing go unrecorded
            ps = float(min(_limits(params, cx)))
        raw.append((ps, cx, (a, b), LIMIT_NAMES[m]))

    candidates = []
    for ps, cx, interval, active in raw:
        if any(abs(ps - c.ps) <= DEDUP_TOL and abs(cx - c.cx) <= DEDUP_TOL for c in candidates):
            continue
        candidates.append(Candidate(ps, cx, _outage_at(params, ps, cx), interval, active))
    meta = {
        "breakpoints": bp,
        "decreasing": decreasing,
        "tie_break": "budget > cap-1 > cap-2",
        "diagnostics": diagnostics,
    }
    if all(c.ps <= 0 for c in candidates):
        return DesignOutcome(0.0, 0.0, 1.0, True, tuple(candidates), {**meta, "reason": "zero power"})
    best = min(candidates, key=lambda c: c.outage)
    return DesignOutcome(best.ps, best.cx, best.outage, False, tuple(candidates), meta)


def grid_search_design(params: SystemParams, n_ps: int = 2001, n_cx: int = 2001, chunk: int = 128) -> DesignOutcome:
    """Exhaustive search over a uniform (ps, cx) grid on [0, ps_max] x [0, 1].

    Feasibility is checked directly with the PU outage upper bounds, not with
    the power caps. ``meta["neighbor_variation"]`` is the largest SU-outage
    change from the best grid point to any of its eight neighbours.
    """
    if n_ps < 2 or n_cx < 2:
        raise DomainError("grid sizes must be >= 2")
    ps = np.linspace(0.0, params.ps_max, n_ps)[1:]
    cx = np.linspace(0.0, 1.0, n_cx)
    best = (math.inf, -1, -1)
    for start in range(0, n_cx, chunk):
        rows = cx[start:start + chunk, None]
        d = SignalDesign(ps[None, :], rows)
        ok = np.ones((rows.shape[0], ps.size), dtype=bool)
        for k in (1, 2):
            ok &= pu_outage_upper(params, k, d) <= params.o_p[k - 1]
        if not ok.any():
            continue
        out = np.where(ok, su_outage(params, d), math.inf)
        flat = int(np.argmin(out))
        r, col = divmod(flat, ps.size)
        if out[r, col] < best[0]:
            best = (float(out[r, col]), start + r, col)
    value, row, col = best
    if row < 0:
        return _silent("empty feasible grid", grid=(n_ps, n_cx))
    nb = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            rr, cc = row + dr, col + dc
            if (dr or dc) and 0 <= rr < n_cx and -1 <= cc < ps.size:
                nb.append(1.0 if cc < 0 else _outage_at(params, ps[cc], cx[rr]))
    variation = max(abs(v - value) for v in nb) if nb else 0.0
    meta = {"grid": (n_ps, n_cx), "index": (row, col + 1), "neighbor_variation": variation}
    return DesignOutcome(float(ps[col]), float(cx[row]), value, False, (), meta)


def feasibility_report(params: SystemParams, outcome: DesignOutcome, proper: bool = False) -> tuple:
    """Excess of each PU outage over its threshold at an outcome (<= 0 is feasible).

    Proper outcomes are checked with the exact closed form, improper ones with
    the upper bound used in their design.
    """
    d = SignalDesign(outcome.ps_star, outcome.cx_star)
    res = []
    for k in (1, 2):
        if proper:
            v = pu_outage_proper(params, k, outcome.ps_star)
        else:
            v = pu_outage_upper(params, k, d)
        res.append(float(v) - params.o_p[k - 1])
    return tuple(res)
