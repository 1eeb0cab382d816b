"""Sparse regression codebook: dictionary, coefficients, index maps and nested bins."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CodebookIndexError, DomainError, ShapeError, SizingError

__all__ = [
    "CodeParams",
    "Dictionary",
    "SparseCoeffs",
    "BinMessage",
    "DEFAULT_MEMORY_BUDGET",
    "DEFAULT_ENUMERATION_CAP",
    "build_dictionary",
    "synthesize",
    "beta_to_index",
    "index_to_beta",
    "bin_split",
    "bin_combine",
    "enumerate_bin",
    "section_grid",
]

DEFAULT_MEMORY_BUDGET = 256 * 2**20  # bytes
DEFAULT_ENUMERATION_CAP = 2**16


def _is_power_of_two(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CodeParams:
    """Shape of a nested SPARC.

    Columns of section ``l`` occupy dictionary columns ``l*M .. l*M + M - 1``;
    each section is split into ``M // M_inner`` sub-sections of ``M_inner``
    consecutive columns. ``amp_power`` of ``None`` defers the choice of the
    codeword power to the caller (see :class:`sparcska.wz.WzConfig`).
    """

    n: int
    l_sections: int
    m_per_section: int
    m_inner: int
    amp_power: float | None = None
    dict_seed: int = 0

    def __post_init__(self):
        for name in ("n", "l_sections", "m_per_section", "m_inner"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if not _is_power_of_two(self.m_per_section) or not _is_power_of_two(self.m_inner):
            raise DomainError("m_per_section and m_inner must be powers of two, got "
                              f"{self.m_per_section} and {self.m_inner}")
        if self.m_inner > self.m_per_section:
            raise DomainError(f"m_inner ({self.m_inner}) exceeds m_per_section ({self.m_per_section})")
        if self.amp_power is not None and not self.amp_power >= 0:
            raise DomainError(f"amp_power must be non-negative, got {self.amp_power!r}")
        if not 0 <= self.dict_seed < 2**64:
            raise DomainError(f"dict_seed must be a 64-bit unsigned integer, got {self.dict_seed!r}")

    @property
    def n_columns(self) -> int:
        return self.m_per_section * self.l_sections

    @property
    def n_subsections(self) -> int:
        return self.m_per_section // self.m_inner

    @property
    def r1(self) -> float:
        """Overall rate L·ln(M)/n in nats per symbol."""
        return self.l_sections * math.log(self.m_per_section) / self.n

    @property
    def r2(self) -> float:
        """Within-bin rate L·ln(M′)/n."""
        return self.l_sections * math.log(self.m_inner) / self.n

    @property
    def r_p(self) -> float:
        """Bin-index (public) rate r1 − r2."""
        return self.r1 - self.r2

    @property
    def alpha(self) -> float:
        if self.l_sections < 2:
            return math.inf
        return math.log(self.m_per_section) / math.log(self.l_sections)

    @property
    def alpha_inner(self) -> float:
        if self.l_sections < 2:
            return math.inf
        return math.log(self.m_inner) / math.log(self.l_sections)

    @property
    def bits_per_section(self) -> int:
        return self.m_per_section.bit_length() - 1

    @property
    def inner_bits_per_section(self) -> int:
        return self.m_inner.bit_length() - 1

    @property
    def codebook_size(self) -> int:
        return self.m_per_section ** self.l_sections

    @property
    def bin_size(self) -> int:
        return self.m_inner ** self.l_sections

    @property
    def bin_count(self) -> int:
        return self.n_subsections ** self.l_sections

    def amplitude(self, power: float | None = None) -> float:
        """Coefficient c = √(n·P′/L) giving expected codeword power P′."""
        power = self.amp_power if power is None else power
        if power is None:
            raise DomainError("no codeword power given and amp_power is unset")
        return math.sqrt(self.n * power / self.l_sections)


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Read-only n×(M·L) design matrix with i.i.d. N(0, 1/n) entries."""

    params: CodeParams
    entries: np.ndarray

    def section(self, l: int) -> np.ndarray:
        m = self.params.m_per_section
        return self.entries[:, l * m:(l + 1) * m]

    def column(self, l: int, j: int) -> np.ndarray:
        return self.entries[:, l * self.params.m_per_section + j]


@dataclass(frozen=True)
class SparseCoeffs:
    """One active column per section plus the shared non-zero value."""

    sections: tuple[int, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(int(s) for s in self.sections))


@dataclass(frozen=True)
class BinMessage:
    """Public message: the chosen sub-section of every section."""

    sub_sections: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sub_sections", tuple(int(s) for s in self.sub_sections))


def build_dictionary(params: CodeParams, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Dictionary:
    nbytes = params.n * params.n_columns * 8
    if nbytes > memory_budget:
        raise SizingError(f"dictionary needs {nbytes} bytes, budget is {memory_budget}")
    rng = np.random.default_rng(params.dict_seed)
    entries = rng.standard_normal((params.n, params.n_columns)) / math.sqrt(params.n)
    entries.setflags(write=False)
    return Dictionary(params, entries)


def _check_sections(sections, params: CodeParams, limit: int, what: str) -> None:
    if len(sections) != params.l_sections:
        raise ShapeError(f"expected {params.l_sections} {what} entries, got {len(sections)}")
    for l, s in enumerate(sections):
        if not 0 <= s < limit:
            raise CodebookIndexError(f"{what} entry {s} in section {l} outside [0, {limit})")


def synthesize(dictionary: Dictionary, beta: SparseCoeffs) -> np.ndarray:
    """Codeword c·Σ_l A[:, l·M + β_l]."""
    params = dictionary.params
    _check_sections(beta.sections, params, params.m_per_section, "section")
    cols = np.arange(params.l_sections) * params.m_per_section + np.asarray(beta.sections)
    return beta.amplitude * dictionary.entries[:, cols].sum(axis=1)


def beta_to_index(beta: SparseCoeffs, params: CodeParams) -> int:
    """Mixed-radix index of ``beta`` with section 0 most significant."""
    _check_sections(beta.sections, params, params.m_per_section, "section")
    idx = 0
    for s in beta.sections:
        idx = idx * params.m_per_section + s
    return idx


def index_to_beta(idx: int, params: CodeParams, amplitude: float = 1.0) -> SparseCoeffs:
    idx = int(idx)
    if not 0 <= idx < params.codebook_size:
        raise CodebookIndexError(f"codeword index {idx} outside [0, {params.codebook_size})")
    sections = []
    for _ in range(params.l_sections):
        idx, s = divmod(idx, params.m_per_section)
        sections.append(s)
    return SparseCoeffs(tuple(reversed(sections)), amplitude)


def bin_split(beta: SparseCoeffs, params: CodeParams) -> tuple[BinMessage, tuple[int, ...]]:
    """Split each section choice into (sub-section, position within the sub-section)."""
    _check_sections(beta.sections, params, params.m_per_section, "section")
    m_in = params.m_inner
    return (BinMessage(tuple(s // m_in for s in beta.sections)),
            tuple(s % m_in for s in beta.sections))


def bin_combine(bin_msg: BinMessage, within, params: CodeParams,
                amplitude: float = 1.0) -> SparseCoeffs:
    _check_sections(bin_msg.sub_sections, params, params.n_subsections, "sub-section")
    _check_sections(within, params, params.m_inner, "within-bin")
    m_in = params.m_inner
    return SparseCoeffs(tuple(b * m_in + w for b, w in zip(bin_msg.sub_sections, within)), amplitude)


def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise SizingError(f"{what} has {count} codewords, above the enumeration cap {cap}; "
                          "use the greedy decoder instead")


def enumerate_bin(bin_msg: BinMessage, params: CodeParams, amplitude: float = 1.0,
                  cap: int = DEFAULT_ENUMERATION_CAP):
    """Yield the (M′)^L members of a bin in increasing codeword-index order."""
    _check_cap(params.bin_size, cap, "bin")
    _check_sections(bin_msg.sub_sections, params, params.n_subsections, "sub-section")
    for within in itertools.product(range(params.m_inner), repeat=params.l_sections):
        yield bin_combine(bin_msg, within, params, amplitude)


def section_grid(choices, chunk: int = 4096):
    """Yield arrays of column choices covering ``product(*choices)`` in lexicographic order.

    ``choices[l]`` is the array of admissible column indices of section ``l``;
    each yielded block has shape ``(k, L)`` with ``k <= chunk``.
    """
    choices = [np.asarray(c, dtype=np.int64) for c in choices]
    sizes = [c.size for c in choices]
    total = math.prod(sizes)
    # strides for decoding a flat lexicographic counter into per-section digits
    strides = np.array([math.prod(sizes[l + 1:]) for l in range(len(sizes))], dtype=np.int64)
    sizes_arr = np.array(sizes, dtype=np.int64)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (flat[:, None] // strides[None, :]) % sizes_arr[None, :]
        yield np.stack([choices[l][digits[:, l]] for l in range(len(choices))], axis=1)
