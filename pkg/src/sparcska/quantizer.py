"""Mapping a real vector to a SPARC codeword."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import (DEFAULT_ENUMERATION_CAP, Dictionary, SparseCoeffs, _check_cap,
                       section_grid, synthesize)
from .errors import ShapeError

__all__ = [
    "QuantizeResult",
    "encode_exhaustive",
    "encode_greedy",
    "encode",
    "distortion_of",
    "min_distance_search",
    "successive_fit",
]


@dataclass(frozen=True)
class QuantizeResult:
    beta: SparseCoeffs
    distortion: float


def distortion_of(target, reconstruction) -> float:
    """Mean squared difference per symbol."""
    target = np.asarray(target, dtype=float)
    reconstruction = np.asarray(reconstruction, dtype=float)
    if target.shape != reconstruction.shape or target.ndim != 1:
        raise ShapeError(f"shape mismatch: {target.shape} vs {reconstruction.shape}")
    diff = target - reconstruction
    return float(diff @ diff) / target.size


def _as_target(target, n: int) -> np.ndarray:
    target = np.asarray(target, dtype=float)
    if target.shape != (n,):
        raise ShapeError(f"expected a vector of length {n}, got shape {target.shape}")
    return target


def min_distance_search(dictionary: Dictionary, target: np.ndarray, step: float,
                        choices) -> tuple[tuple[int, ...], float]:
    """Exhaustive argmin of ‖target − step·Σ_l A[:, l·M + j_l]‖² over ``product(*choices)``.

    Ties resolve to the lexicographically smallest choice, which is the
    smallest codeword index. Returns the choice and the squared distance.
    """
    entries = dictionary.entries
    m = dictionary.params.m_per_section
    offsets = np.arange(len(choices), dtype=np.int64) * m
    best, best_d = None, math.inf
    for block in section_grid(choices):
        cw = np.zeros((entries.shape[0], block.shape[0]))
        for l in range(block.shape[1]):
            cw += entries[:, offsets[l] + block[:, l]]
        resid = target[:, None] - step * cw
        d = np.einsum("ij,ij->j", resid, resid)
        k = int(np.argmin(d))
        if d[k] < best_d:
            best_d, best = float(d[k]), tuple(int(v) for v in block[k])
    return best, best_d


def successive_fit(dictionary: Dictionary, target: np.ndarray, step: float,
                   starts=None, width: int | None = None) -> tuple[int, ...]:
    """Section-by-section residual fit with cancellation.

    In section ``l`` the candidate columns are ``starts[l] .. starts[l] + width - 1``
    (the whole section when ``starts`` is None). The column minimising
    ‖residual − step·column‖² wins, lowest index on ties, and ``step`` times
    that column is subtracted before moving on. With one section this is
    the exhaustive minimum-distance search.
    """
    params = dictionary.params
    m = params.m_per_section
    if starts is None:
        starts = [0] * params.l_sections
        width = m
    resid = np.array(target, dtype=float)
    chosen = []
    for l, start in enumerate(starts):
        lo = l * m + start
        block = dictionary.entries[:, lo:lo + width]
        # ‖r − s·a‖² = ‖r‖² − 2s⟨a, r⟩ + s²‖a‖², so maximise 2⟨a, r⟩ − s‖a‖²
        score = 2.0 * (block.T @ resid) - step * np.einsum("ij,ij->j", block, block)
        j = int(np.argmax(score))
        resid -= step * block[:, j]
        chosen.append(start + j)
    return tuple(chosen)


def encode_exhaustive(dictionary: Dictionary, target, amplitude: float | None = None,
                      cap: int = DEFAULT_ENUMERATION_CAP) -> QuantizeResult:
    """Global minimum-distance codeword; exponential in L, intended for small instances."""
    params = dictionary.params
    c = params.amplitude() if amplitude is None else amplitude
    target = _as_target(target, params.n)
    _check_cap(params.codebook_size, cap, "codebook")
    choices = [np.arange(params.m_per_section)] * params.l_sections
    sections, _ = min_distance_search(dictionary, target, c, choices)
    beta = SparseCoeffs(sections, c)
    return QuantizeResult(beta, distortion_of(target, synthesize(dictionary, beta)))


def encode_greedy(dictionary: Dictionary, target, amplitude: float | None = None) -> QuantizeResult:
    params = dictionary.params
    c = params.amplitude() if amplitude is None else amplitude
    target = _as_target(target, params.n)
    beta = SparseCoeffs(successive_fit(dictionary, target, c), c)
    return QuantizeResult(beta, distortion_of(target, synthesize(dictionary, beta)))


def encode(dictionary: Dictionary, target, amplitude: float | None = None,
           method: str = "greedy", cap: int = DEFAULT_ENUMERATION_CAP) -> QuantizeResult:
    """Dispatch on ``method``: ``'greedy'``, ``'exhaustive'``, or ``'auto'`` (exhaustive under the cap)."""
    if method == "auto":
        method = "exhaustive" if dictionary.params.codebook_size <= cap else "greedy"
    if method == "exhaustive":
        return encode_exhaustive(dictionary, target, amplitude, cap)
    if method == "greedy":
        return encode_greedy(dictionary, target, amplitude)
    raise ValueError(f"unknown quantization method {method!r}")
