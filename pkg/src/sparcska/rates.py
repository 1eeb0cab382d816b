"""Closed-form rate, capacity and feasibility formulas.

All rates are in nats per source symbol. Every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

from .errors import DomainError

__all__ = [
    "SourceModel",
    "RateMargins",
    "RatePoint",
    "effective_distortion",
    "rd_rate",
    "wz_snr",
    "wz_capacity",
    "secret_key_rate",
    "public_rate_bound",
    "optimal_key_rate",
    "rate_gap",
    "vstar",
    "alpha0",
    "operational_rates",
    "alpha_req",
    "rate_point",
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class SourceModel:
    """Variances of Alice's source and of Bob's and Eve's observation noise."""

    sigma_x2: float
    sigma_b2: float
    sigma_e2: float

    def __post_init__(self):
        for name in ("sigma_x2", "sigma_b2", "sigma_e2"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))


@dataclass(frozen=True)
class RateMargins:
    """Relative back-off of the operational rates from their asymptotic limits."""

    delta1: float = 0.05
    delta2: float = 0.05

    def __post_init__(self):
        if not self.delta1 >= 0:
            raise DomainError(f"delta1 must be non-negative, got {self.delta1!r}")
        if not 0 <= self.delta2 < 1:
            raise DomainError(f"delta2 must lie in [0, 1), got {self.delta2!r}")


# Zero margins are allowed so the boundary (δ=0) rates can be evaluated;
# the documented defaults are strictly positive.
ZERO_MARGINS = RateMargins(0.0, 0.0)


def effective_distortion(sigma_x2: float, q: float) -> float:
    """Mean-squared error of representing X by ξU, σ_X²Q/(σ_X²+Q)."""
    sigma_x2 = _positive("sigma_x2", sigma_x2)
    q = _positive("q", q)
    return sigma_x2 * q / (sigma_x2 + q)


def rd_rate(sigma2: float, d: float) -> float:
    """Gaussian rate-distortion function ½ln(σ²/D) for 0 < D < σ²."""
    sigma2 = _positive("sigma2", sigma2)
    d = float(d)
    if not 0 < d < sigma2:
        raise DomainError(f"distortion must lie in (0, {sigma2}), got {d!r}")
    return 0.5 * math.log(sigma2 / d)


def wz_snr(sigma_x2: float, q: float, sigma_eta2: float) -> float:
    """SNR of the effective channel from the quantized codeword to a noisy observation.

    ``q = 0`` is accepted as the unquantized limit σ_X²/σ_η².
    """
    sigma_x2 = _positive("sigma_x2", sigma_x2)
    sigma_eta2 = _positive("sigma_eta2", sigma_eta2)
    q = float(q)
    if not q >= 0 or not math.isfinite(q):
        raise DomainError(f"q must be finite and non-negative, got {q!r}")
    return sigma_x2 * sigma_x2 / (sigma_x2 * q + (sigma_x2 + q) * sigma_eta2)


def wz_capacity(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 0:
        raise DomainError(f"SNR must be non-negative, got {gamma!r}")
    return 0.5 * math.log1p(gamma)


def secret_key_rate(model: SourceModel, q: float) -> float:
    """R_K = C_WZ,Bob − C_WZ,Eve at quantization variance ``q``."""
    q = _positive("q", q)
    g_b = wz_snr(model.sigma_x2, q, model.sigma_b2)
    g_e = wz_snr(model.sigma_x2, q, model.sigma_e2)
    return wz_capacity(g_b) - wz_capacity(g_e)


def public_rate_bound(model: SourceModel, q: float) -> float:
    """R_P = R*(D_X) − C_WZ,Bob at quantization variance ``q``."""
    q = _positive("q", q)
    g_b = wz_snr(model.sigma_x2, q, model.sigma_b2)
    return 0.5 * math.log((model.sigma_x2 + q) / q) - wz_capacity(g_b)


def optimal_key_rate(model: SourceModel) -> float:
    """I(X;Y) − I(X;Z) for the Gaussian source model."""
    s = model.sigma_x2
    return 0.5 * (math.log1p(s / model.sigma_b2) - math.log1p(s / model.sigma_e2))


def rate_gap(model: SourceModel, q: float) -> float:
    return optimal_key_rate(model) - secret_key_rate(model, q)


def _vstar_equation(v: float) -> float:
    return (1.0 + v) * math.log1p(v) - 3.0 * v


@lru_cache(maxsize=None)
def vstar() -> float:
    """Positive root of (1+v)ln(1+v) = 3v, the branch point of :func:`alpha0`."""
    return brentq(_vstar_equation, 1.0, 100.0, xtol=1e-13, rtol=1e-15, maxiter=200)


def _alpha0_low(v: float) -> float:
    t = (1.0 + v) * math.log1p(v)
    return 4.0 * v * t / (t - v) ** 2


def _alpha0_high(v: float) -> float:
    t = (1.0 + v) * math.log1p(v)
    return t / (t - 2.0 * v)


def alpha0(v: float) -> float:
    """Section-size-rate requirement of the within-bin channel code at SNR ``v``."""
    v = float(v)
    if not v > 0:
        raise DomainError(f"v must be positive, got {v!r}")
    return _alpha0_low(v) if v < vstar() else _alpha0_high(v)


def operational_rates(model: SourceModel, q: float,
                      margins: RateMargins = RateMargins()) -> tuple[float, float]:
    """Quantization rate R₁ and inner bin rate R₂ backed off by ``margins``.

    R₁ is floored at ξ = σ_X²/(σ_X²+Q) before the margin is applied so the
    first term of :func:`alpha_req` keeps a positive denominator.
    """
    q = _positive("q", q)
    sx = model.sigma_x2
    xi = sx / (sx + q)
    r_star = 0.5 * math.log((sx + q) / q)
    r1 = (1.0 + margins.delta1) * max(r_star, xi)
    r2 = (1.0 - margins.delta2) * wz_capacity(wz_snr(sx, q, model.sigma_b2))
    return r1, r2


def alpha_req(model: SourceModel, q: float,
              margins: RateMargins = RateMargins()) -> float:
    """Smallest section size rate for which the nested construction is guaranteed.

    Returns ``math.inf`` when the margins leave a non-positive denominator
    (e.g. ``delta1 = 0`` with the ξ floor active) or a zero inner rate.
    """
    r1, r2 = operational_rates(model, q, margins)
    xi = model.sigma_x2 / (model.sigma_x2 + q)
    denom = r1 - xi
    if denom <= 0 or r2 <= 0:
        return math.inf
    g_b = wz_snr(model.sigma_x2, q, model.sigma_b2)
    return max(2.5 * r1 / denom, (r1 / r2) * alpha0(g_b))


@dataclass(frozen=True)
class RatePoint:
    """Every closed-form quantity evaluated at one quantization variance.

    ``error`` carries the message of a domain failure when the point could
    not be evaluated; numeric fields are NaN in that case.
    """

    q: float
    d_x: float
    r_star: float
    gamma_bob: float
    gamma_eve: float
    c_bob: float
    c_eve: float
    r_k: float
    r_p: float
    rate_gap: float
    alpha_req: float
    feasible: bool
    error: str | None = None

    @classmethod
    def failed(cls, q: float, message: str) -> "RatePoint":
        nan = math.nan
        return cls(q, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, False, message)


def rate_point(model: SourceModel, q: float, alpha_fixed: float = math.inf,
               margins: RateMargins = RateMargins()) -> RatePoint:
    """Evaluate all closed-form quantities at ``q``; ``feasible`` compares against ``alpha_fixed``."""
    q = float(q)
    sx = model.sigma_x2
    d_x = effective_distortion(sx, q)
    g_b = wz_snr(sx, q, model.sigma_b2)
    g_e = wz_snr(sx, q, model.sigma_e2)
    c_b, c_e = wz_capacity(g_b), wz_capacity(g_e)
    r_k = c_b - c_e
    a_req = alpha_req(model, q, margins)
    return RatePoint(
        q=q,
        d_x=d_x,
        r_star=rd_rate(sx, d_x),
        gamma_bob=g_b,
        gamma_eve=g_e,
        c_bob=c_b,
        c_eve=c_e,
        r_k=r_k,
        r_p=public_rate_bound(model, q),
        rate_gap=optimal_key_rate(model) - r_k,
        alpha_req=a_req,
        feasible=bool(a_req <= alpha_fixed),
    )
