"""Three-party protocol runs and their Monte Carlo evaluation."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .codebook import (DEFAULT_ENUMERATION_CAP, BinMessage, CodeParams, Dictionary,
                       SparseCoeffs, build_dictionary)
from .errors import DomainError, SizingError, SparcSkaError
from .privacy import (HashSpec, beta_to_bits, choose_key_length, estimate_leakage,
                      estimate_uniformity, toeplitz_hash)
from .quantizer import distortion_of
from .rates import SourceModel
from .wz import WzConfig, alice_encode, bob_decode, eve_decode, reconstruct

__all__ = [
    "Stream",
    "derive_seed",
    "SessionTranscript",
    "TrialStats",
    "SimRow",
    "run_session",
    "run_sessions",
    "aggregate",
    "monte_carlo",
    "sweep_simulate",
    "eve_statistic",
    "STAT_LEVELS",
]

STAT_LEVELS = 16


class Stream(IntEnum):
    """Independent random streams drawn per trial from the master seed."""

    SOURCE = 0
    NOISE_B = 1
    NOISE_E = 2
    DITHER = 3
    HASH = 4
    DICTIONARY = 5
    ROW = 6


def derive_seed(master_seed: int, trial: int, stream: Stream) -> int:
    """64-bit seed for ``(trial, stream)``, a pure function of its arguments."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial), int(stream)))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


class TrialError(SparcSkaError):
    """A module error raised while running one trial."""


def eve_statistic(z: np.ndarray, beta_e: SparseCoeffs, cfg: WzConfig,
                  dictionary: Dictionary) -> int:
    """Correlation of ``z`` with Eve's reconstruction, quantized to 16 uniform levels on [−1, 1]."""
    x_hat = reconstruct(beta_e, cfg, dictionary)
    denom = math.sqrt(float(z @ z) * float(x_hat @ x_hat))
    rho = float(z @ x_hat) / denom if denom > 0 else 0.0
    return min(STAT_LEVELS - 1, int((rho + 1.0) / 2.0 * STAT_LEVELS))


@dataclass(frozen=True, eq=False)
class SessionTranscript:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    beta_a: SparseCoeffs
    bin: BinMessage
    beta_b_hat: SparseCoeffs
    beta_e_hat: SparseCoeffs
    key_a: np.ndarray
    key_b: np.ndarray
    key_e: np.ndarray
    eve_stat: int
    distortion: float
    seeds: dict

    @property
    def wz_success(self) -> bool:
        return self.beta_b_hat.sections == self.beta_a.sections

    @property
    def key_match(self) -> bool:
        return bool(np.array_equal(self.key_a, self.key_b))

    def __eq__(self, other):
        if not isinstance(other, SessionTranscript):
            return NotImplemented
        arrays = ("x", "y", "z", "key_a", "key_b", "key_e")
        plain = ("beta_a", "bin", "beta_b_hat", "beta_e_hat", "eve_stat", "distortion", "seeds")
        return (all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and all(getattr(self, a) == getattr(other, a) for a in plain))


def run_session(model: SourceModel, cfg: WzConfig, hash_spec: HashSpec, master_seed: int,
                dictionary: Dictionary | None = None, *, trial: int = 0,
                decoder: str = "auto", quantizer: str = "greedy",
                cap: int = DEFAULT_ENUMERATION_CAP) -> SessionTranscript:
    """One run: sources, Alice's quantize-and-bin, Bob's and Eve's decoding, hashing.

    Every random draw uses a stream derived from ``(master_seed, trial)``;
    ``hash_spec`` is applied as given.
    """
    params = cfg.params
    if hash_spec.in_bits != params.l_sections * params.bits_per_section:
        raise DomainError(f"hash input length {hash_spec.in_bits} does not match "
                          f"{params.l_sections}·log2({params.m_per_section})")
    if dictionary is None:
        dictionary = build_dictionary(params)
    n = params.n
    seeds = {s.name.lower(): derive_seed(master_seed, trial, s)
             for s in (Stream.SOURCE, Stream.NOISE_B, Stream.NOISE_E, Stream.DITHER)}
    seeds.update(master=int(master_seed), trial=int(trial), hash=int(hash_spec.seed),
                 dictionary=int(params.dict_seed))
    try:
        x = np.random.default_rng(seeds["source"]).normal(0.0, math.sqrt(model.sigma_x2), n)
        y = x + np.random.default_rng(seeds["noise_b"]).normal(0.0, math.sqrt(model.sigma_b2), n)
        z = x + np.random.default_rng(seeds["noise_e"]).normal(0.0, math.sqrt(model.sigma_e2), n)
        beta_a, bin_msg, _ = alice_encode(x, cfg, dictionary, seeds["dither"],
                                          method=quantizer, cap=cap)
        beta_b = bob_decode(y, bin_msg, cfg, dictionary, mode=decoder, cap=cap)
        beta_e = eve_decode(z, bin_msg, cfg, dictionary, mode=decoder, cap=cap)
        keys = [toeplitz_hash(hash_spec, beta_to_bits(b, params)) for b in (beta_a, beta_b, beta_e)]
        stat = eve_statistic(z, beta_e, cfg, dictionary)
        dist = distortion_of(x, reconstruct(beta_a, cfg, dictionary))
    except SparcSkaError as exc:
        raise TrialError(f"trial {trial} (master seed {master_seed}): {exc}") from exc
    return SessionTranscript(x, y, z, beta_a, bin_msg, beta_b, beta_e, *keys, stat, dist, seeds)


def run_sessions(model: SourceModel, cfg: WzConfig, hash_spec: HashSpec, trials: int,
                 master_seed: int, dictionary: Dictionary | None = None, *,
                 fresh_hash: bool = True, workers: int = 1, **kwargs) -> list[SessionTranscript]:
    """``trials`` sessions with counter-derived seeds, returned in trial order.

    With ``fresh_hash`` each trial draws its own Toeplitz seed from the HASH stream.
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    if dictionary is None:
        dictionary = build_dictionary(cfg.params)

    def one(t):
        spec = hash_spec.reseeded(derive_seed(master_seed, t, Stream.HASH)) if fresh_hash else hash_spec
        return run_session(model, cfg, spec, master_seed, dictionary, trial=t, **kwargs)

    if workers <= 1:
        return [one(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials)))


@dataclass(frozen=True)
class TrialStats:
    """Aggregate of a batch of sessions.

    ``uniformity`` is the plug-in entropy deficit in bits and ``leakage`` the
    plug-in variational distance between the key and Eve's summary; either
    is NaN when the key alphabet is too large for the sample count.
    """

    trials: int
    distortion_mean: float
    wz_error_rate: float
    key_disagree_rate: float
    uniformity: float
    leakage: float
    wall_time: float = 0.0
    key_bits: int = 0


def _keys_matrix(keys: list[np.ndarray]) -> np.ndarray:
    return np.stack(keys) if keys else np.zeros((0, 0), dtype=np.uint8)


def aggregate(transcripts: list[SessionTranscript], view: str = "decoded",
              wall_time: float = 0.0) -> TrialStats:
    """Fold transcripts into :class:`TrialStats`.

    ``view`` selects Eve's discrete summary for leakage: ``'decoded'`` is the
    hash of her decoded coefficients, ``'statistic'`` her 16-level
    correlation statistic.
    """
    if not transcripts:
        raise DomainError("cannot aggregate an empty batch")
    if view not in ("decoded", "statistic"):
        raise DomainError(f"view must be 'decoded' or 'statistic', got {view!r}")
    n = len(transcripts)
    dist = sum(t.distortion for t in transcripts) / n
    wz_err = sum(not t.wz_success for t in transcripts) / n
    disagree = sum(not t.key_match for t in transcripts) / n
    keys = _keys_matrix([t.key_a for t in transcripts])
    k = keys.shape[1]
    uniformity = leakage = math.nan
    if k == 0:
        uniformity = leakage = 0.0
    else:
        try:
            uniformity = estimate_uniformity(keys).entropy_deficit
        except SizingError:
            pass
        if view == "decoded":
            views = _keys_matrix([t.key_e for t in transcripts])
        else:
            views = np.array([[t.eve_stat] for t in transcripts])
        try:
            leakage = estimate_leakage(keys, views)
        except SizingError:
            pass
    return TrialStats(n, dist, wz_err, disagree, uniformity, leakage, wall_time, k)


def monte_carlo(model: SourceModel, cfg: WzConfig, hash_spec: HashSpec, trials: int,
                master_seed: int, dictionary: Dictionary | None = None, *,
                view: str = "decoded", workers: int = 1, **kwargs) -> TrialStats:
    start = time.perf_counter()
    transcripts = run_sessions(model, cfg, hash_spec, trials, master_seed, dictionary,
                               workers=workers, **kwargs)
    return aggregate(transcripts, view, time.perf_counter() - start)


@dataclass(frozen=True)
class SimRow:
    q: float
    params: CodeParams
    stats: TrialStats
    transcripts: list = field(default_factory=list, repr=False)


def sweep_simulate(grid, model: SourceModel, trials: int, master_seed: int, *,
                   out_bits=None, nu: float = 0.0, view: str = "decoded", workers: int = 1,
                   session_workers: int = 1, keep_transcripts: bool = False, **kwargs) -> list[SimRow]:
    """One :class:`SimRow` per ``(q, params)`` grid entry.

    Row ``i`` runs with master seed ``derive_seed(master_seed, i, ROW)`` so it
    can be reproduced in isolation. ``workers`` parallelises rows and
    ``session_workers`` the trials inside a row. The key length is ``out_bits`` when
    given, otherwise the key-length rule at margin ``nu``.
    """
    grid = list(grid)
    if not grid:
        raise DomainError("simulation grid is empty")

    def row(i_entry):
        i, (q, params) = i_entry
        cfg = WzConfig(float(q), params, model)
        k = out_bits if out_bits is not None else choose_key_length(model, params, q, nu).k_bits
        spec = HashSpec(params.l_sections * params.bits_per_section, k)
        seed = derive_seed(master_seed, i, Stream.ROW)
        start = time.perf_counter()
        ts = run_sessions(model, cfg, spec, trials, seed, build_dictionary(params),
                          workers=session_workers, **kwargs)
        stats = aggregate(ts, view, time.perf_counter() - start)
        return SimRow(float(q), params, stats, ts if keep_transcripts else [])

    if workers <= 1:
        return [row(e) for e in enumerate(grid)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row, enumerate(grid)))
