"""Constrained choice of the quantization variance and figure sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, SparcSkaError
from .rates import RateMargins, RatePoint, SourceModel, alpha_req, rate_point, secret_key_rate

__all__ = [
    "SweepConfig",
    "OptResult",
    "q_feasible",
    "q_opt",
    "sweep_region",
    "sweep_channel",
    "ChannelCurve",
    "Q_SEARCH_BOUNDS",
]

# Relative to σ_X²; alpha_req diverges at both ends of this range.
Q_SEARCH_BOUNDS = (1e-6, 1e3)
_SEARCH_POINTS = 1201
_Q_FLOOR = 1e-300


@dataclass(frozen=True)
class SweepConfig:
    q_min: float = 1e-3
    q_max: float = 1e2
    n_points: int = 200
    log_spaced: bool = True
    alpha_fixed: float = 6.0
    margins: RateMargins = field(default_factory=RateMargins)

    def __post_init__(self):
        if not 0 < self.q_min < self.q_max:
            raise DomainError(f"need 0 < q_min < q_max, got ({self.q_min}, {self.q_max})")
        if self.n_points < 2:
            raise DomainError(f"n_points must be at least 2, got {self.n_points}")
        if not self.alpha_fixed > 0:
            raise DomainError(f"alpha_fixed must be positive, got {self.alpha_fixed}")

    def grid(self) -> np.ndarray:
        if self.log_spaced:
            return np.logspace(math.log10(self.q_min), math.log10(self.q_max), self.n_points)
        return np.linspace(self.q_min, self.q_max, self.n_points)


@dataclass(frozen=True)
class OptResult:
    """Outcome of :func:`q_opt`.

    ``q_opt`` is ``None`` when no Q in the search domain is feasible.
    ``q_upper`` is the upper crossing of the feasible interval, reported for
    diagnostics only.
    """

    q_opt: float | None
    r_k_at_opt: float
    bracket: tuple[float, float] | None
    q_upper: float | None = None
    alpha_min: float = math.nan

    @property
    def feasible(self) -> bool:
        return self.q_opt is not None


def q_feasible(model: SourceModel, q: float, alpha_fixed: float,
               margins: RateMargins = RateMargins()) -> bool:
    return alpha_req(model, q, margins) <= alpha_fixed


def _bisect_log(fn, lo: float, hi: float, rtol: float = 1e-9) -> tuple[float, float]:
    """Shrink [lo, hi] with ``fn(lo)`` false and ``fn(hi)`` true until hi/lo − 1 ≤ rtol."""
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if fn(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def q_opt(model: SourceModel, alpha_fixed: float,
          margins: RateMargins = RateMargins()) -> OptResult:
    """Smallest Q with alpha_req(Q) ≤ alpha_fixed, or an infeasible result.

    The feasible set is located on a log grid over the search domain and must
    be a single interval; its lower edge is then refined by bisection to a
    relative tolerance of 1e-9. When the bottom of the grid is already
    feasible the lower bracket is extended downward a decade at a time.
    """
    if not alpha_fixed > 0:
        raise DomainError(f"alpha_fixed must be positive, got {alpha_fixed!r}")
    lo_b, hi_b = (b * model.sigma_x2 for b in Q_SEARCH_BOUNDS)
    grid = np.logspace(math.log10(lo_b), math.log10(hi_b), _SEARCH_POINTS)
    req = np.array([alpha_req(model, q, margins) for q in grid])
    ok = req <= alpha_fixed
    alpha_min = float(req.min())
    if not ok.any():
        return OptResult(None, 0.0, None, None, alpha_min)
    idx = np.flatnonzero(ok)
    if idx[-1] - idx[0] + 1 != idx.size:
        raise SparcSkaError(
            "feasible set of Q is not a single interval on the search grid; "
            f"model={model}, alpha_fixed={alpha_fixed}")

    def feasible(q):
        return alpha_req(model, q, margins) <= alpha_fixed

    first, last = int(idx[0]), int(idx[-1])
    if first == 0:
        # alpha_req grows only logarithmically as Q -> 0, so the lower crossing
        # can sit below the scan domain: walk down by decades to bracket it.
        hi = float(grid[0])
        lo = hi / 10.0
        while feasible(lo):
            if lo < _Q_FLOOR:
                return OptResult(lo, secret_key_rate(model, lo), (lo, lo), None, alpha_min)
            hi, lo = lo, lo / 10.0
        bracket = _bisect_log(feasible, lo, hi)
    else:
        bracket = _bisect_log(feasible, float(grid[first - 1]), float(grid[first]))
    q_lo_edge = bracket[1]
    if last == grid.size - 1:
        q_up = float(grid[-1])
    else:
        lo, hi = _bisect_log(lambda q: not feasible(q), float(grid[last]), float(grid[last + 1]))
        q_up = lo
    return OptResult(q_lo_edge, secret_key_rate(model, q_lo_edge), bracket, q_up, alpha_min)


def _safe_point(model: SourceModel, q: float, cfg: SweepConfig) -> RatePoint:
    try:
        return rate_point(model, q, cfg.alpha_fixed, cfg.margins)
    except (DomainError, ZeroDivisionError, OverflowError) as exc:
        return RatePoint.failed(float(q), f"{type(exc).__name__}: {exc}")


def sweep_region(model: SourceModel, cfg: SweepConfig, workers: int = 1) -> list[RatePoint]:
    """One :class:`RatePoint` per grid value of Q, ordered by Q."""
    grid = cfg.grid()
    if workers <= 1:
        return [_safe_point(model, q, cfg) for q in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda q: _safe_point(model, q, cfg), grid))


@dataclass(frozen=True)
class ChannelCurve:
    """R_K(Q) for one value of the varied channel variance."""

    which: str
    sigma2: float
    model: SourceModel
    points: list[RatePoint]


def sweep_channel(model_base: SourceModel, vary: str, values, cfg: SweepConfig,
                  workers: int = 1) -> list[ChannelCurve]:
    """R_K(Q) curves as Bob's (``vary='bob'``) or Eve's (``vary='eve'``) noise variance changes.

    Points with ``feasible == False`` form the dashed part of the curves.
    """
    attr = {"bob": "sigma_b2", "eve": "sigma_e2"}.get(vary)
    if attr is None:
        raise DomainError(f"vary must be 'bob' or 'eve', got {vary!r}")
    curves = []
    for value in values:
        model = replace(model_base, **{attr: value})
        curves.append(ChannelCurve(vary, float(value), model, sweep_region(model, cfg, workers)))
    return curves
