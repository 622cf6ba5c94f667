"""Seedable fading-draw engine and empirical outage estimators.

Substream ``k`` of seed ``s`` is ``Philox(s).jumped(k)``: a counter-based
generator advanced by 2**128 steps per stream, so streams never overlap.
Every realization consumes exactly nine uniforms, in the order of
:data:`DRAW_ORDER`, each mapped through the exponential inverse CDF.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import SystemParams, node_indices, snr_threshold
from .rates import FadingRealization, SignalDesign

GENERATOR = f"numpy.random.Philox/jumped (numpy {np.__version__})"
DRAW_ORDER = ("g_p1", "g_p2", "i_p1", "i_p2", "i_s1", "i_s2", "v_p1", "v_p2", "g_s")
VARIATES_PER_DRAW = len(DRAW_ORDER)
CHUNK = 1 << 16


@dataclass(frozen=True)
class McConfig:
    samples: int
    seed: int = 0
    streams: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError("samples must be >= 1")
        if self.streams < 1:
            raise DomainError("streams must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def stream_sizes(self) -> list[int]:
        """Equal split; the remainder goes to the last stream."""
        base = self.samples // self.streams
        sizes = [base] * self.streams
        sizes[-1] += self.samples - base * self.streams
        return sizes


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    samples: int
    generator: str = GENERATOR


def stream_generator(seed: int, k: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed).jumped(k))


def _means(params: SystemParams) -> np.ndarray:
    return np.array(
        [*params.gbar_p, *params.ibar_p, *params.ibar_s, *params.vbar_p, params.gbar_s]
    )


def draw_realization(params: SystemParams, rng: np.random.Generator, size=None) -> FadingRealization:
    """Draw one realization, or ``size`` of them as arrays."""
    shape = (VARIATES_PER_DRAW,) if size is None else (size, VARIATES_PER_DRAW)
    u = rng.random(shape)
    x = -_means(params) * np.log1p(-u)
    cols = x.T if size is not None else x
    return FadingRealization(
        g_p=(cols[0], cols[1]),
        i_p=(cols[2], cols[3]),
        i_s=(cols[4], cols[5]),
        v_p=(cols[6], cols[7]),
        g_s=cols[8],
    )


def _su_outage_mask(params: SystemParams, real: FadingRealization, ps, cx):
    # R_s < R_0s  <=>  snr^2 (1 - cx^2) + 2 snr < Gamma_s
    load = params.p[0] * real.i_p[0] + params.p[1] * real.i_p[1] + 1.0
    snr = ps * real.g_s / load
    return snr * snr * (1.0 - cx * cx) + 2.0 * snr < snr_threshold(params.r0_s)


def _pu_outage_mask(params: SystemParams, i: int, real: FadingRealization, ps, cx):
    # R_pi < R_0pi  <=>  sig^2 + 2 sig b < Gamma_pi (b^2 - c^2)
    ii, jj = node_indices(i)
    sig = params.p[ii] * real.g_p[ii]
    intf = ps * real.i_s[jj]
    b = params.p[jj] * real.v_p[jj] + intf + 1.0
    c = intf * cx
    return sig * sig + 2.0 * sig * b < snr_threshold(params.r0_p[ii]) * (b - c) * (b + c)


def _count_stream(params, mask_fn, cfg: McConfig, k: int, n: int) -> int:
    rng = stream_generator(cfg.seed, k)
    hits = 0
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        hits += int(np.count_nonzero(mask_fn(draw_realization(params, rng, m))))
        done += m
    return hits


def _estimate(params, mask_fn, cfg: McConfig, workers: int) -> McEstimate:
    sizes = cfg.stream_sizes()
    jobs = [(k, n) for k, n in enumerate(sizes) if n > 0]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda kn: _count_stream(params, mask_fn, cfg, *kn), jobs))
    else:
        counts = [_count_stream(params, mask_fn, cfg, k, n) for k, n in jobs]
    hits = sum(counts)
    mean = hits / cfg.samples
    std_err = math.sqrt(mean * (1.0 - mean) / cfg.samples)
    return McEstimate(mean, std_err, cfg.samples)


def estimate_su_outage(params: SystemParams, d: SignalDesign, cfg: McConfig, workers: int = 1) -> McEstimate:
    """Fraction of draws where the SU rate falls below its target."""
    ps, cx = float(d.ps), float(d.cx)
    return _estimate(params, lambda r: _su_outage_mask(params, r, ps, cx), cfg, workers)


def estimate_pu_outage(
    params: SystemParams, i: int, d: SignalDesign, cfg: McConfig, workers: int = 1
) -> McEstimate:
    """Fraction of draws where the rate of the link from PU node i drops below target."""
    node_indices(i)
    ps, cx = float(d.ps), float(d.cx)
    return _estimate(params, lambda r: _pu_outage_mask(params, i, r, ps, cx), cfg, workers)
