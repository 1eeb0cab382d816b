"""Quantize-and-bin encoder and within-bin decoding with side information."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import (DEFAULT_ENUMERATION_CAP, BinMessage, CodeParams, Dictionary,
                       SparseCoeffs, _check_cap, _check_sections, bin_combine, bin_split,
                       synthesize)
from .errors import DomainError, ShapeError
from .quantizer import encode, min_distance_search, successive_fit
from .rates import SourceModel

__all__ = [
    "WzConfig",
    "default_power",
    "alice_encode",
    "bob_decode",
    "eve_decode",
    "reconstruct",
]


def default_power(model: SourceModel, q: float, params: CodeParams) -> float:
    """Test-channel codeword power (σ_X²+Q)(1 − e^(−2R₁)) for the auxiliary source U."""
    return (model.sigma_x2 + q) * -math.expm1(-2.0 * params.r1)


@dataclass(frozen=True)
class WzConfig:
    q: float
    params: CodeParams
    model: SourceModel

    def __post_init__(self):
        if not self.q > 0 or not math.isfinite(self.q):
            raise DomainError(f"q must be a finite positive number, got {self.q!r}")

    @property
    def xi(self) -> float:
        """Regression coefficient σ_X²/(σ_X²+Q) of X on U."""
        return self.model.sigma_x2 / (self.model.sigma_x2 + self.q)

    @property
    def power(self) -> float:
        if self.params.amp_power is not None:
            return self.params.amp_power
        return default_power(self.model, self.q, self.params)

    @property
    def amplitude(self) -> float:
        return self.params.amplitude(self.power)


def _vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ShapeError(f"{name} must have shape ({n},), got {v.shape}")
    return v


def alice_encode(x, cfg: WzConfig, dictionary: Dictionary, noise_seed=None, *,
                 dither=None, method: str = "greedy",
                 cap: int = DEFAULT_ENUMERATION_CAP) -> tuple[SparseCoeffs, BinMessage, np.ndarray]:
    """Dither ``x`` with N(0, Q) noise, quantize ``u = x + v`` and compute its bin.

    ``dither`` overrides the noise drawn from ``noise_seed``.
    """
    n = cfg.params.n
    x = _vector(x, n, "x")
    if dither is None:
        dither = np.random.default_rng(noise_seed).normal(0.0, math.sqrt(cfg.q), n)
    u = x + _vector(dither, n, "dither")
    beta = encode(dictionary, u, cfg.amplitude, method=method, cap=cap).beta
    return beta, bin_split(beta, cfg.params)[0], u


def bob_decode(y, bin_msg: BinMessage, cfg: WzConfig, dictionary: Dictionary, *,
               mode: str = "auto", cap: int = DEFAULT_ENUMERATION_CAP) -> SparseCoeffs:
    """Recover Alice's coefficients from side information ``y`` and the public bin.

    ``mode='exhaustive'`` is maximum likelihood for y = ξ·codeword + Gaussian
    noise: the bin member minimising ‖y − ξ·synthesize(β)‖², codeword energy
    included. ``mode='greedy'`` runs the section-wise residual fit restricted
    to the bin's sub-sections. ``'auto'`` is exhaustive when the bin fits
    under ``cap``.
    """
    params = cfg.params
    y = _vector(y, params.n, "y")
    _check_sections(bin_msg.sub_sections, params, params.n_subsections, "sub-section")
    c = cfg.amplitude
    m_in = params.m_inner
    if m_in == 1:
        return bin_combine(bin_msg, (0,) * params.l_sections, params, c)
    if mode == "auto":
        mode = "exhaustive" if params.bin_size <= cap else "greedy"
    starts = [b * m_in for b in bin_msg.sub_sections]
    step = cfg.xi * c
    if mode == "exhaustive":
        _check_cap(params.bin_size, cap, "bin")
        choices = [np.arange(s, s + m_in) for s in starts]
        sections, _ = min_distance_search(dictionary, y, step, choices)
    elif mode == "greedy":
        sections = successive_fit(dictionary, y, step, starts, m_in)
    else:
        raise ValueError(f"unknown decoding mode {mode!r}")
    return SparseCoeffs(sections, c)


def eve_decode(z, bin_msg: BinMessage, cfg: WzConfig, dictionary: Dictionary, *,
               mode: str = "auto", cap: int = DEFAULT_ENUMERATION_CAP) -> SparseCoeffs:
    """Bob's decoder applied to the eavesdropper's observation."""
    return bob_decode(z, bin_msg, cfg, dictionary, mode=mode, cap=cap)


def reconstruct(beta: SparseCoeffs, cfg: WzConfig, dictionary: Dictionary) -> np.ndarray:
    """Estimate ξ·codeword of the source X."""
    return cfg.xi * synthesize(dictionary, beta)
