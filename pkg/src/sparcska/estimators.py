"""scikit-learn style wrappers around the codebook, Wyner-Ziv and hashing layers.

Rows of ``X`` are blocks of ``n`` source symbols; ``n`` is learned from the
number of columns at ``fit`` time.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .codebook import (DEFAULT_ENUMERATION_CAP, BinMessage, CodeParams, SparseCoeffs,
                       build_dictionary, synthesize)
from .errors import ShapeError
from .privacy import HashSpec, toeplitz_hash
from .quantizer import encode
from .rates import SourceModel
from .wz import WzConfig, alice_encode, bob_decode

__all__ = ["SparcQuantizer", "WynerZivReconciler", "ToeplitzExtractor"]


def _check_width(X, expected: int, what: str) -> None:
    if X.shape[1] != expected:
        raise ShapeError(f"{what} has {X.shape[1]} columns, expected {expected}")


def _check_indices(S, estimator) -> np.ndarray:
    S = check_array(S, dtype=np.int64)
    _check_width(S, estimator.n_sections, "section index array")
    return S


class SparcQuantizer(TransformerMixin, BaseEstimator):
    """Quantize blocks to SPARC codewords; ``transform`` returns section indices.

    Parameters
    ----------
    n_sections, section_size : int
        L and M of the codebook (M a power of two).
    power : float or None
        Codeword power P′. ``None`` fits σ̂²(1 − e^(−2R)) from the training data,
        σ̂² being the mean square of its entries.
    method : {'greedy', 'exhaustive', 'auto'}
    dict_seed : int
    """

    def __init__(self, n_sections=16, section_size=64, power=None, method="greedy",
                 dict_seed=0, enumeration_cap=DEFAULT_ENUMERATION_CAP):
        self.n_sections = n_sections
        self.section_size = section_size
        self.power = power
        self.method = method
        self.dict_seed = dict_seed
        self.enumeration_cap = enumeration_cap

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.params_ = CodeParams(X.shape[1], self.n_sections, self.section_size,
                                  self.section_size, None, self.dict_seed)
        if self.power is None:
            self.power_ = float(np.mean(X * X)) * -math.expm1(-2.0 * self.params_.r1)
        else:
            self.power_ = float(self.power)
        self.amplitude_ = self.params_.amplitude(self.power_)
        self.dictionary_ = build_dictionary(self.params_)
        return self

    def transform(self, X):
        check_is_fitted(self, "dictionary_")
        X = check_array(X, dtype=np.float64)
        _check_width(X, self.n_features_in_, "X")
        return np.array([encode(self.dictionary_, row, self.amplitude_, self.method,
                                self.enumeration_cap).beta.sections for row in X], dtype=np.int64)

    def inverse_transform(self, S):
        """Codewords for rows of section indices."""
        check_is_fitted(self, "dictionary_")
        S = _check_indices(S, self)
        return np.array([synthesize(self.dictionary_, SparseCoeffs(row, self.amplitude_))
                         for row in S])

    def score(self, X, y=None):
        """Negative mean squared quantization error per symbol."""
        X = check_array(X, dtype=np.float64)
        recon = self.inverse_transform(self.transform(X))
        return -float(np.mean((X - recon) ** 2))


class WynerZivReconciler(BaseEstimator):
    """Alice's quantize-and-bin encoder paired with Bob's within-bin decoder.

    ``fit(X, Y)`` estimates σ_X² from Alice's blocks and, when Bob's blocks
    ``Y`` are supplied, σ_b² from ``Y − X``; Eve plays no part in coding so
    the fitted model reuses σ_b² for her. ``encode`` returns section indices
    and bin messages; ``predict(Y, bins)`` returns Bob's decoded indices.
    """

    def __init__(self, q=1.0, n_sections=12, section_size=32, bin_size=4, decoder="auto",
                 dict_seed=0, random_state=None, enumeration_cap=DEFAULT_ENUMERATION_CAP):
        self.q = q
        self.n_sections = n_sections
        self.section_size = section_size
        self.bin_size = bin_size
        self.decoder = decoder
        self.dict_seed = dict_seed
        self.random_state = random_state
        self.enumeration_cap = enumeration_cap

    def fit(self, X, Y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.sigma_x2_ = float(np.mean(X * X))
        if Y is not None:
            Y = check_array(Y, dtype=np.float64)
            if Y.shape != X.shape:
                raise ShapeError(f"Y has shape {Y.shape}, X has {X.shape}")
            self.sigma_b2_ = float(np.mean((Y - X) ** 2))
        else:
            self.sigma_b2_ = self.sigma_x2_
        model = SourceModel(self.sigma_x2_, self.sigma_b2_, self.sigma_b2_)
        params = CodeParams(X.shape[1], self.n_sections, self.section_size, self.bin_size,
                            None, self.dict_seed)
        self.config_ = WzConfig(float(self.q), params, model)
        self.dictionary_ = build_dictionary(params)
        return self

    def encode(self, X):
        check_is_fitted(self, "dictionary_")
        X = check_array(X, dtype=np.float64)
        _check_width(X, self.n_features_in_, "X")
        rng = np.random.default_rng(self.random_state)
        sections, bins = [], []
        for row in X:
            beta, bin_msg, _ = alice_encode(row, self.config_, self.dictionary_, rng)
            sections.append(beta.sections)
            bins.append(bin_msg.sub_sections)
        return np.array(sections, dtype=np.int64), np.array(bins, dtype=np.int64)

    def predict(self, Y, bins):
        check_is_fitted(self, "dictionary_")
        Y = check_array(Y, dtype=np.float64)
        _check_width(Y, self.n_features_in_, "Y")
        bins = _check_indices(bins, self)
        if bins.shape[0] != Y.shape[0]:
            raise ShapeError(f"{Y.shape[0]} observation rows but {bins.shape[0]} bin rows")
        return np.array([bob_decode(y, BinMessage(b), self.config_, self.dictionary_,
                                    mode=self.decoder, cap=self.enumeration_cap).sections
                         for y, b in zip(Y, bins)], dtype=np.int64)

    def score(self, X, Y):
        """Fraction of blocks Bob recovers exactly (dither drawn from ``random_state``)."""
        sections, bins = self.encode(X)
        return float(np.mean(np.all(self.predict(Y, bins) == sections, axis=1)))


class ToeplitzExtractor(TransformerMixin, BaseEstimator):
    """Hash rows of bits to ``out_bits``-bit keys with a seeded Toeplitz matrix."""

    def __init__(self, out_bits=8, seed=0):
        self.out_bits = out_bits
        self.seed = seed

    def fit(self, B, y=None):
        B = check_array(B, dtype=np.uint8)
        self.n_features_in_ = B.shape[1]
        self.hash_spec_ = HashSpec(B.shape[1], self.out_bits, self.seed)
        return self

    def transform(self, B):
        check_is_fitted(self, "hash_spec_")
        B = check_array(B, dtype=np.uint8)
        _check_width(B, self.n_features_in_, "bit array")
        if np.any(B > 1):
            raise ValueError("bit arrays must contain only 0 and 1")
        return np.array([toeplitz_hash(self.hash_spec_, row) for row in B], dtype=np.uint8)
