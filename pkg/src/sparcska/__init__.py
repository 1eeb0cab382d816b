"""SPARC-based secret key agreement for correlated Gaussian sources."""

from .codebook import (BinMessage, CodeParams, Dictionary, SparseCoeffs, bin_combine, bin_split,
                       beta_to_index, build_dictionary, enumerate_bin, index_to_beta, synthesize)
from .errors import (CodebookIndexError, ConfigError, DomainError, ShapeError, SizingError,
                     SparcSkaError)
from .estimators import SparcQuantizer, ToeplitzExtractor, WynerZivReconciler
from .feasibility import OptResult, SweepConfig, q_feasible, q_opt, sweep_channel, sweep_region
from .privacy import (HashSpec, KeyLengthRule, beta_to_bits, bits_to_beta, choose_key_length,
                      estimate_leakage, estimate_uniformity, toeplitz_hash)
from .protocol import (SessionTranscript, TrialStats, monte_carlo, run_session, run_sessions,
                       sweep_simulate)
from .quantizer import QuantizeResult, distortion_of, encode_exhaustive, encode_greedy
from .rates import (RateMargins, RatePoint, SourceModel, alpha0, alpha_req, effective_distortion,
                    operational_rates, optimal_key_rate, public_rate_bound, rate_gap, rate_point,
                    rd_rate, secret_key_rate, vstar, wz_capacity, wz_snr)
from .wz import WzConfig, alice_encode, bob_decode, eve_decode, reconstruct

__version__ = "0.1.0"
