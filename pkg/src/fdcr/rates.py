"""Instantaneous achievable rates and the Psi helpers used by the outage formulas.

All functions broadcast over numpy arrays: a :class:`SignalDesign` or a
:class:`FadingRealization` may hold arrays instead of scalars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import SystemParams, node_indices, snr_threshold


@dataclass(frozen=True)
class FadingRealization:
    """One joint draw of the instantaneous CNRs (pairs are indexed by PU node)."""

    g_p: tuple
    i_p: tuple
    i_s: tuple
    v_p: tuple
    g_s: object


@dataclass(frozen=True)
class SignalDesign:
    """SU operating point: transmit power ``ps`` (W) and circularity ``cx``."""

    ps: object
    cx: object = 0.0

    def __post_init__(self):
        ps = np.asarray(self.ps, dtype=float)
        cx = np.asarray(self.cx, dtype=float)
        if np.any(~np.isfinite(ps)) or np.any(ps < 0):
            raise DomainError(f"ps must be finite and >= 0, got {self.ps!r}")
        if np.any(~(cx >= 0)) or np.any(~(cx <= 1)):
            raise DomainError(f"cx must lie in [0, 1], got {self.cx!r}")


def pu_rate(params: SystemParams, i: int, real: FadingRealization, d: SignalDesign):
    """Rate of the link received by PU node j from node i (b/s/Hz)."""
    ii, jj = node_indices(i)
    sig = params.p[ii] * np.asarray(real.g_p[ii], dtype=float)
    rsi = params.p[jj] * np.asarray(real.v_p[jj], dtype=float)
    intf = d.ps * np.asarray(real.i_s[jj], dtype=float)
    b = rsi + intf + 1.0
    c = intf * d.cx
    # numerator minus denominator expands to sig**2 + 2 sig b
    ratio = 1.0 + (sig * sig + 2.0 * sig * b) / ((b - c) * (b + c))
    return 0.5 * np.log2(ratio)


def _su_interference(params: SystemParams, real: FadingRealization):
    return (
        params.p[0] * np.asarray(real.i_p[0], dtype=float)
        + params.p[1] * np.asarray(real.i_p[1], dtype=float)
        + 1.0
    )


def su_rate(params: SystemParams, real: FadingRealization, d: SignalDesign):
    """SU rate under improper signaling, interference from both PU nodes."""
    snr = d.ps * np.asarray(real.g_s, dtype=float) / _su_interference(params, real)
    return 0.5 * np.log2(snr * snr * (1.0 - np.square(d.cx)) + 2.0 * snr + 1.0)


def psi_s(params: SystemParams, d: SignalDesign):
    """``(sqrt(1 + (1 - cx^2) Gamma_s) - 1) / (ps * gbar_s)``."""
    ps = np.asarray(d.ps, dtype=float)
    if np.any(ps <= 0):
        raise DomainError("psi_s needs ps > 0")
    gamma_s = snr_threshold(params.r0_s)
    w = 1.0 - np.square(d.cx)
    return _sqrt1pm1(w * gamma_s) / (ps * params.gbar_s)


def psi_p(params: SystemParams, i: int, x):
    """``(sqrt(1 + Gamma_pi (1 - x^2)) - 1) / (p_i * gbar_pi)``; non-increasing in x."""
    ii, _ = node_indices(i)
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)) or np.any(~(x <= 1)):
        raise DomainError(f"psi_p argument must lie in [0, 1], got {x!r}")
    gamma_p = snr_threshold(params.r0_p[ii])
    return _sqrt1pm1(gamma_p * (1.0 - x * x)) / (params.p[ii] * params.gbar_p[ii])


def _sqrt1pm1(z):
    # sqrt(1 + z) - 1 without cancellation for small z
    return z / (np.sqrt(1.0 + z) + 1.0)
