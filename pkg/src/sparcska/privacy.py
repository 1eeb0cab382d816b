"""Toeplitz hashing of the reconciled sequence and plug-in secrecy estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import CodeParams, SparseCoeffs, _check_sections
from .errors import DomainError, ShapeError, SizingError
from .rates import SourceModel, secret_key_rate

__all__ = [
    "HashSpec",
    "KeyLengthRule",
    "beta_to_bits",
    "bits_to_beta",
    "toeplitz_matrix",
    "toeplitz_hash",
    "choose_key_length",
    "key_to_hex",
    "hex_to_key",
    "UniformityEstimate",
    "estimate_uniformity",
    "estimate_leakage",
    "independence_null_bound",
]


@dataclass(frozen=True)
class HashSpec:
    """A member of the binary Toeplitz family, fixed by ``seed``.

    ``out_bits == 0`` denotes the empty key produced when the key-length
    rule leaves nothing to extract.
    """

    in_bits: int
    out_bits: int
    seed: int = 0

    def __post_init__(self):
        if self.in_bits < 1:
            raise DomainError(f"in_bits must be positive, got {self.in_bits}")
        if not 0 <= self.out_bits <= self.in_bits:
            raise DomainError(f"out_bits must lie in [0, {self.in_bits}], got {self.out_bits}")

    @property
    def diagonal_bits(self) -> np.ndarray:
        """The in_bits + out_bits − 1 seed bits defining the matrix diagonals."""
        count = max(self.in_bits + self.out_bits - 1, 0)
        return np.random.default_rng(self.seed).integers(0, 2, size=count, dtype=np.uint8)

    def reseeded(self, seed: int) -> "HashSpec":
        return HashSpec(self.in_bits, self.out_bits, seed)


@dataclass(frozen=True)
class KeyLengthRule:
    nu: float
    k_bits: int


def beta_to_bits(beta: SparseCoeffs, params: CodeParams) -> np.ndarray:
    """Big-endian log₂(M)-bit section indices, section 0 first."""
    _check_sections(beta.sections, params, params.m_per_section, "section")
    width = params.bits_per_section
    sections = np.asarray(beta.sections, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((sections[:, None] >> shifts[None, :]) & 1).astype(np.uint8).ravel()


def bits_to_beta(bits, params: CodeParams, amplitude: float = 1.0) -> SparseCoeffs:
    bits = np.asarray(bits, dtype=np.int64)
    width = params.bits_per_section
    if bits.shape != (params.l_sections * width,):
        raise ShapeError(f"expected {params.l_sections * width} bits, got shape {bits.shape}")
    weights = 1 << np.arange(width - 1, -1, -1)
    return SparseCoeffs(tuple(bits.reshape(params.l_sections, width) @ weights), amplitude)


def toeplitz_matrix(spec: HashSpec) -> np.ndarray:
    """out_bits × in_bits matrix with T[i, j] = t[in_bits − 1 + i − j]."""
    if spec.out_bits == 0:
        return np.zeros((0, spec.in_bits), dtype=np.uint8)
    rev = spec.diagonal_bits[::-1]
    return np.lib.stride_tricks.sliding_window_view(rev, spec.in_bits)[::-1]


def toeplitz_hash(spec: HashSpec, bits) -> np.ndarray:
    """GF(2) product of the Toeplitz matrix with ``bits``."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (spec.in_bits,):
        raise ShapeError(f"hash input must have {spec.in_bits} bits, got shape {bits.shape}")
    t = toeplitz_matrix(spec)
    return ((t.astype(np.int64) @ bits) & 1).astype(np.uint8)


def choose_key_length(model: SourceModel, params: CodeParams, q: float,
                      nu: float = 0.0) -> KeyLengthRule:
    """Key length floor(n·max(0, R_K − ν)/ln 2) bits.

    The length is also capped at the L·log₂(M′) bits of the within-bin
    index, the part of the common sequence the public message leaves
    undisclosed.
    """
    if not nu >= 0:
        raise DomainError(f"nu must be non-negative, got {nu!r}")
    usable = max(0.0, secret_key_rate(model, q) - nu)
    k = math.floor(params.n * usable / math.log(2))
    k = min(k, params.l_sections * params.inner_bits_per_section)
    return KeyLengthRule(nu, k)


def key_to_hex(bits) -> str:
    """Lowercase hex of the big-endian bit string, ⌈k/4⌉ digits; empty key gives ''."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return ""
    value = int("".join("1" if b else "0" for b in bits), 2)
    return format(value, f"0{math.ceil(bits.size / 4)}x")


def hex_to_key(text: str, k_bits: int) -> np.ndarray:
    if k_bits == 0:
        return np.zeros(0, dtype=np.uint8)
    value = int(text, 16)
    return np.array([(value >> (k_bits - 1 - i)) & 1 for i in range(k_bits)], dtype=np.uint8)


def _key_codes(keys) -> tuple[np.ndarray, int]:
    keys = np.asarray(keys, dtype=np.int64)
    if keys.ndim != 2:
        raise ShapeError(f"keys must be a 2-D array of bits, got shape {keys.shape}")
    k = keys.shape[1]
    if k > 62:
        raise SizingError(f"key length {k} too large for histogram estimation")
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return keys @ weights, k


@dataclass(frozen=True)
class UniformityEstimate:
    """Plug-in distance from uniform and entropy deficit log₂|K| − H(K) in bits."""

    variational_distance: float
    entropy_deficit: float


def estimate_uniformity(keys, min_samples_per_cell: float = 4.0) -> UniformityEstimate:
    """Histogram estimates of how far the key distribution is from uniform.

    Requires at least ``min_samples_per_cell`` samples per key value.
    """
    codes, k = _key_codes(keys)
    alphabet = 1 << k
    if codes.size < min_samples_per_cell * alphabet:
        raise SizingError(f"{codes.size} keys are too few for a {alphabet}-letter alphabet")
    p = np.bincount(codes, minlength=alphabet) / codes.size
    tv = 0.5 * float(np.abs(p - 1.0 / alphabet).sum())
    nz = p[p > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    return UniformityEstimate(tv, max(0.0, k - entropy))


def estimate_leakage(keys, views, min_samples_per_cell: float = 1.0) -> float:
    """Plug-in ½‖P_{K,V} − P_K·P_V‖₁ over the empirical joint histogram."""
    codes, k = _key_codes(keys)
    views = np.asarray(views)
    if views.shape[0] != codes.size:
        raise ShapeError(f"{codes.size} keys but {views.shape[0]} views")
    _, view_codes = np.unique(views, axis=0, return_inverse=True)
    view_codes = view_codes.ravel()
    n_views = int(view_codes.max()) + 1 if view_codes.size else 0
    cells = (1 << k) * n_views
    if codes.size < min_samples_per_cell * cells:
        raise SizingError(f"{codes.size} samples are too few for {cells} joint cells")
    joint = np.zeros((1 << k, n_views))
    np.add.at(joint, (codes, view_codes), 1.0)
    joint /= codes.size
    product = joint.sum(axis=1)[:, None] * joint.sum(axis=0)[None, :]
    return 0.5 * float(np.abs(joint - product).sum())


def independence_null_bound(key_alphabet: int, view_alphabet: int, samples: int) -> float:
    """Twice the worst-case mean of the plug-in leakage under independence.

    Each cell deviation has standard deviation at most √(p_k p_v / N), so the
    expected plug-in value is at most ½√(2/(πN))·√(|K||V|).
    """
    return math.sqrt(2.0 * key_alphabet * view_alphabet / (math.pi * samples))
