"""Seeded simulation of CINAR and censored (Tobit) CINAR count grids.

The recursion is unilateral: each site combines one thinned past value,
selected by a multinomial decision among the lag set, with an innovation
draw.  Simulation runs on an extended ``(n1 + burn_in) x (n2 + burn_in)``
grid whose left/top margins are initialized with i.i.d. innovation draws;
the returned grid is the bottom-right ``n1 x n2`` block of "most recent"
counts.

Randomness comes from a counter-based Philox generator seeded by
``SimConfig.seed``.  The generator is consumed in a fixed order (innovation
field, decision field, then binomial thinnings along successive
anti-diagonals), so identical configs produce bit-identical grids while the
interior loop stays vectorized across each anti-diagonal wavefront.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .model import CinarParams, CountGrid, SignPattern

__all__ = [
    "SimConfig",
    "binomial_thin",
    "simulate_cinar",
    "simulate_tobit_cinar",
]


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one simulated grid.

    Parameters
    ----------
    params : CinarParams
    n1, n2 : int
        Output grid dimensions (rows, columns), both >= 1.
    burn_in : int
        Width of the discarded margin on the extended grid (default 100).
    seed : int
        64-bit unsigned seed; same config => bit-identical output.
    signs : SignPattern, optional
        Present only for the censored (Tobit) variant.
    """

    params: CinarParams
    n1: int
    n2: int
    burn_in: int = 100
    seed: int = 0
    signs: Optional[SignPattern] = None

    def __post_init__(self):
        if int(self.n1) < 1 or int(self.n2) < 1:
            raise ValidationError(
                f"grid dimensions must be >= 1, got ({self.n1}, {self.n2})"
            )
        if int(self.burn_in) < 0:
            raise ValidationError(f"burn_in must be >= 0, got {self.burn_in}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


def binomial_thin(x, alpha, rng):
    """One binomial thinning draw: alpha applied to a count x.

    Conventions: thinning with alpha = 0 gives 0 and alpha = 1 returns x
    unchanged, for any x >= 0.
    """
    x = int(x)
    if x < 0:
        raise ValidationError(f"thinned count must be >= 0, got {x}")
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"thinning probability must be in [0,1], got {alpha}")
    return int(rng.binomial(x, alpha))


def simulate_cinar(config, return_decisions=False):
    """Simulate a CINAR(p1, p2) count grid.

    Returns a CountGrid; with ``return_decisions=True`` also returns the
    per-site selected-lag indices (into ``order.lags``) for the returned
    block, which lets callers audit the exactly-one-selection mechanism.
    """
    if config.signs is not None:
        raise ValidationError(
            "sign pattern supplied; use simulate_tobit_cinar for the censored model"
        )
    return _simulate_kernel(config, signs=None, censor=False,
                            return_decisions=return_decisions)


def simulate_tobit_cinar(config, return_decisions=False):
    """Simulate a censored (Tobit) CINAR(p1, p2) count grid.

    Each site computes Y = s(i,j) * (thinned selected past) + innovation and
    stores X = max(0, Y).  With all signs +1 this coincides with
    simulate_cinar draw-for-draw (same seed => bit-identical grid).
    """
    if config.signs is None:
        raise ValidationError(
            "censored simulation needs a SignPattern in SimConfig.signs"
        )
    if config.signs.order != config.params.order:
        raise ValidationError(
            "sign pattern order does not match the model order"
        )
    return _simulate_kernel(config, signs=config.signs, censor=True,
                            return_decisions=return_decisions)


def _check_sim_params(params):
    """Like validate_params, but a point mass at 0 is still simulable.

    The strict model invariant requires positive innovation moments (needed
    for stationary moments and estimation); the recursion itself only needs
    nonnegative ones, and the degenerate case is a useful absorbing-state
    check.
    """
    theta = params.theta
    if np.any(theta < 0):
        raise ValidationError("negative coefficient: every theta[i,j] must be >= 0")
    alpha = float(np.sum(theta))
    if not 0.0 < alpha < 1.0:
        raise ValidationError(
            f"coefficient sum alpha must lie in (0,1), got {alpha:.6g}"
        )
    mu_eps, sigma2_eps = params.innovation.moments()
    if not (np.isfinite(mu_eps) and mu_eps >= 0.0):
        raise ValidationError("innovation mean must be finite and >= 0")
    if not (np.isfinite(sigma2_eps) and sigma2_eps >= 0.0):
        raise ValidationError("innovation variance must be finite and >= 0")


def _simulate_kernel(config, signs, censor, return_decisions):
    """Shared recursion for the plain and censored simulators."""
    params = config.params
    _check_sim_params(params)
    order = params.order
    p1, p2 = order.p1, order.p2
    n1, n2 = int(config.n1), int(config.n2)
    big1, big2 = n1 + int(config.burn_in), n2 + int(config.burn_in)

    alpha = params.alpha
    cum_phi = np.cumsum(params.phi)
    lags = np.asarray(order.lags, dtype=np.int64)
    m = len(lags)
    sgn = np.ones(m, dtype=np.int64) if signs is None else signs.signs

    gen = np.random.Generator(np.random.Philox(int(config.seed)))

    # Fixed consumption order: innovation field, then decision uniforms,
    # then thinning draws diagonal by diagonal.
    eps = np.asarray(params.innovation.sample(gen, size=(big1, big2)),
                     dtype=np.int64)
    dec = np.searchsorted(cum_phi, gen.random((big1, big2)), side="left")
    dec = np.minimum(dec, m - 1).astype(np.int64)

    i_sel = lags[dec, 0]
    j_sel = lags[dec, 1]
    s_sel = sgn[dec]

    x = np.zeros((big1, big2), dtype=np.int64)
    # margin band: sites whose full lag neighbourhood would fall off the grid
    x[:p1, :] = eps[:p1, :]
    x[:, :p2] = eps[:, :p2]

    # interior sites (s >= p1, t >= p2) by ascending anti-diagonal s + t = d;
    # every referenced past lies on a strictly smaller diagonal
    for d in range(p1 + p2, big1 + big2 - 1):
        s_lo = max(p1, d - (big2 - 1))
        s_hi = min(big1 - 1, d - p2)
        if s_lo > s_hi:
            continue
        ss = np.arange(s_lo, s_hi + 1)
        tt = d - ss
        past = x[ss - i_sel[ss, tt], tt - j_sel[ss, tt]]
        thin = gen.binomial(past, alpha)
        y = s_sel[ss, tt] * thin + eps[ss, tt]
        x[ss, tt] = np.maximum(y, 0) if censor else y

    grid = CountGrid(x[big1 - n1:, big2 - n2:])
    if return_decisions:
        return grid, dec[big1 - n1:, big2 - n2:].copy()
    return grid
