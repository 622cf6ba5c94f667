"""Scenario definition and the scalar thresholds derived from it.

Every CNR is noise-normalized (noise variance fixed to 1), so the whole
internal API is linear. dB only appears at the edges via :func:`db_to_linear`.
Per-node quantities are stored as ``(node1, node2)`` tuples and addressed with
the 1-based node index ``i``; the partner node is ``j = 3 - i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import DomainError

Pair = tuple[float, float]

PAIR_FIELDS = ("p", "gbar_p", "ibar_p", "ibar_s", "vbar_p", "r0_p", "o_p")


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(lin):
    return 10.0 * math.log10(lin)


def node_indices(i: int) -> tuple[int, int]:
    """Map node index ``i`` in {1, 2} to zero-based ``(i, j)`` tuple offsets."""
    if i not in (1, 2):
        raise DomainError(f"node index must be 1 or 2, got {i!r}")
    return i - 1, 2 - i


def _as_pair(name, value) -> Pair:
    if isinstance(value, (int, float)):
        return (float(value), float(value))
    try:
        a, b = value
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a scalar or a pair, got {value!r}") from None
    return (float(a), float(b))


@dataclass(frozen=True)
class SystemParams:
    """One scenario: powers, mean CNRs, target rates and outage thresholds.

    Attributes:
        p: PU node transmit powers (W).
        gbar_p: mean direct CNR of the link transmitted by PU node i.
        ibar_p: mean interference CNR from PU node i at the SU receiver.
        ibar_s: mean interference CNR from the SU transmitter at PU node i.
        vbar_p: mean residual self-interference CNR of PU node i.
        gbar_s: mean SU direct CNR.
        r0_p: PU target rates (b/s/Hz).
        r0_s: SU target rate (b/s/Hz).
        o_p: PU maximum outage probabilities.
        ps_max: SU power budget (W).

    Scalars given for pair fields are broadcast to both nodes.
    """

    p: Pair
    gbar_p: Pair
    ibar_p: Pair
    ibar_s: Pair
    vbar_p: Pair
    gbar_s: float
    r0_p: Pair
    r0_s: float
    o_p: Pair
    ps_max: float

    def __post_init__(self):
        for name in PAIR_FIELDS:
            object.__setattr__(self, name, _as_pair(name, getattr(self, name)))
        for name in ("gbar_s", "r0_s", "ps_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for f in fields(self):
            vals = getattr(self, f.name)
            for v in vals if isinstance(vals, tuple) else (vals,):
                if not math.isfinite(v):
                    raise DomainError(f"{f.name} must be finite, got {v!r}")
                if v < 0:
                    raise DomainError(f"{f.name} must be non-negative, got {v!r}")
        if min(self.p) <= 0 or self.ps_max <= 0:
            raise DomainError("transmit powers p and ps_max must be positive")
        if max(self.o_p) >= 1:
            raise DomainError(f"o_p must lie in [0, 1), got {self.o_p!r}")

    @classmethod
    def baseline(cls, **overrides) -> "SystemParams":
        """Reference scenario of the numerical examples (dB values converted)."""
        base = dict(
            p=1.0,
            gbar_p=db_to_linear(25.0),
            ibar_p=db_to_linear(3.0),
            ibar_s=db_to_linear(13.0),
            vbar_p=db_to_linear(5.0),
            gbar_s=db_to_linear(20.0),
            r0_p=0.5,
            r0_s=0.5,
            o_p=0.01,
            ps_max=1.0,
        )
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class PuConstraintConstants:
    """Constants of the quadratic PU-constraint inequality for one node.

    ``lambda_`` and ``upsilon_`` are derived from the other three fields, so
    they always stay consistent.
    """

    gamma_p: float
    mu: float
    beta: float

    def __post_init__(self):
        if self.gamma_p < 0 or self.mu < 0 or self.beta < 1:
            raise DomainError(
                f"need gamma_p >= 0, mu >= 0, beta >= 1; got {self.gamma_p}, {self.mu}, {self.beta}"
            )

    @property
    def lambda_(self) -> float:
        return self.beta * self.gamma_p - self.mu

    @property
    def upsilon_(self) -> float:
        mu, beta = self.mu, self.beta
        return mu * mu + 2.0 * beta * mu - self.gamma_p * beta * beta


def snr_threshold(r0: float) -> float:
    """Linear threshold ``2**(2 r0) - 1`` matching the half-log2 rate forms."""
    if not math.isfinite(r0) or r0 < 0:
        raise DomainError(f"target rate must be finite and >= 0, got {r0!r}")
    return math.expm1(2.0 * r0 * math.log(2.0))


def qos_margin(p_i: float, gbar_p_i: float, o_p_i: float) -> float:
    """Log margin ``p_i * gbar_p_i * ln(1 / (1 - o_p_i))``."""
    if not 0 <= o_p_i < 1:
        raise DomainError(f"outage threshold must lie in [0, 1), got {o_p_i!r}")
    return p_i * gbar_p_i * -math.log1p(-o_p_i)


def max_interference_margin(consts: PuConstraintConstants) -> float:
    """Largest interference-to-noise ratio PU node i tolerates (diagnostic only)."""
    if consts.gamma_p <= 0:
        raise DomainError("max_interference_margin needs gamma_p > 0")
    return max(0.0, consts.mu / (math.sqrt(1.0 + consts.gamma_p) - 1.0) - 1.0)


def constraint_constants(params: SystemParams, i: int) -> PuConstraintConstants:
    ii, jj = node_indices(i)
    return PuConstraintConstants(
        gamma_p=snr_threshold(params.r0_p[ii]),
        mu=qos_margin(params.p[ii], params.gbar_p[ii], params.o_p[ii]),
        beta=params.p[jj] * params.vbar_p[jj] + 1.0,
    )
