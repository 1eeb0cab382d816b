"""Run configuration: JSON schema, strict parsing, overrides and provenance.

A config file is a JSON object whose top-level keys are section names; each
section is an object of the keys listed in :data:`SCHEMA`. Every key is
optional and unknown keys are rejected. A CSV written by the CLI can also be
loaded: its ``# config:`` header line holds the effective configuration.

Sections and defaults::

    model   sigma_x2=1.0 sigma_b2=0.1 sigma_e2=0.2
    code    n=96 l_sections=12 m_per_section=32 m_inner=4
            amp_power=null dict_seed=null        (null seed: derived from sim.master_seed)
    wz      q=1.0 delta1=0.05 delta2=0.05 decoder="auto" quantizer="greedy"
    hash    nu=0.0 out_bits=null                 (null: key-length rule)
    sweep   q_min=0.001 q_max=100.0 n_points=200 log_spaced=true alpha_fixed=6.0
    region  scenarios=[[0.05,0.4],[0.1,0.2],[0.15,0.18]]   ([sigma_b2, sigma_e2] pairs)
    impact  eve_values=[0.2,0.3,0.4] bob_fixed=0.1 bob_values=[0.05,0.1,0.15] eve_fixed=0.4
    sim     trials=200 master_seed=0 workers=1 view="decoded" q_values=null m_inner_values=null
            transcripts=true timing=false
    output  directory=null format="csv" bits=false

``sim.workers`` and ``output.directory`` only affect execution, so they are
not echoed into artifacts or their names.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

from .codebook import CodeParams
from .errors import ConfigError
from .feasibility import SweepConfig
from .protocol import Stream, derive_seed
from .rates import RateMargins, SourceModel

__all__ = ["SCHEMA", "RunConfig", "load_config", "OUTPUT_DIR_ENV", "EXECUTION_KEYS"]

OUTPUT_DIR_ENV = "SPARCSKA_OUTPUT_DIR"

_NUM = (int, float)
_OPT_INT = (int, type(None))
# section -> key -> (default, accepted types)
SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {"sigma_x2": (1.0, _NUM), "sigma_b2": (0.1, _NUM), "sigma_e2": (0.2, _NUM)},
    "code": {
        "n": (96, int), "l_sections": (12, int), "m_per_section": (32, int), "m_inner": (4, int),
        "amp_power": (None, (int, float, type(None))), "dict_seed": (None, _OPT_INT),
    },
    "wz": {"q": (1.0, _NUM), "delta1": (0.05, _NUM), "delta2": (0.05, _NUM),
           "decoder": ("auto", str), "quantizer": ("greedy", str)},
    "hash": {"nu": (0.0, _NUM), "out_bits": (None, _OPT_INT)},
    "sweep": {"q_min": (1e-3, _NUM), "q_max": (100.0, _NUM), "n_points": (200, int),
              "log_spaced": (True, bool), "alpha_fixed": (6.0, _NUM)},
    "region": {"scenarios": ([[0.05, 0.4], [0.1, 0.2], [0.15, 0.18]], list)},
    "impact": {"eve_values": ([0.2, 0.3, 0.4], list), "bob_fixed": (0.1, _NUM),
               "bob_values": ([0.05, 0.1, 0.15], list), "eve_fixed": (0.4, _NUM)},
    "sim": {"trials": (200, int), "master_seed": (0, int), "workers": (1, int),
            "view": ("decoded", str), "q_values": (None, (list, type(None))),
            "m_inner_values": (None, (list, type(None))),
            "transcripts": (True, bool), "timing": (False, bool)},
    "output": {"directory": (None, (str, type(None))), "format": ("csv", str), "bits": (False, bool)},
}

# keys that change how a run executes but never what it computes; they are
# left out of the echo so artifacts do not depend on them
EXECUTION_KEYS = frozenset({("sim", "workers"), ("output", "directory")})

_CHOICES = {
    ("wz", "decoder"): ("auto", "exhaustive", "greedy"),
    ("wz", "quantizer"): ("auto", "exhaustive", "greedy"),
    ("sim", "view"): ("decoded", "statistic"),
    ("output", "format"): ("csv", "json"),
}


def _check_value(section: str, key: str, value):
    default, types = SCHEMA[section][key]
    # bool is an int subclass; only accept it where a bool is expected
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{section}.{key}: expected {types}, got a boolean")
    if not isinstance(value, types):
        raise ConfigError(f"{section}.{key}: expected {types}, got {type(value).__name__}")
    choices = _CHOICES.get((section, key))
    if choices and value not in choices:
        raise ConfigError(f"{section}.{key}: must be one of {choices}, got {value!r}")
    if isinstance(default, float) and isinstance(value, int):
        value = float(value)
    return value


@dataclass
class RunConfig:
    """Effective configuration plus the origin of every value ('default', 'file' or 'flag')."""

    values: dict = field(default_factory=lambda: {s: {k: copy.deepcopy(v[0]) for k, v in keys.items()}
                                                  for s, keys in SCHEMA.items()})
    provenance: dict = field(default_factory=lambda: {s: {k: "default" for k in keys}
                                                      for s, keys in SCHEMA.items()})

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def set(self, section: str, key: str, value, source: str) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        self.values[section][key] = _check_value(section, key, value)
        self.provenance[section][key] = source

    def echo(self) -> dict:
        """Result-determining values: everything except :data:`EXECUTION_KEYS`."""
        return {s: {k: copy.deepcopy(v) for k, v in keys.items() if (s, k) not in EXECUTION_KEYS}
                for s, keys in self.values.items()}

    def echo_provenance(self) -> dict:
        return {s: {k: v for k, v in keys.items() if (s, k) not in EXECUTION_KEYS}
                for s, keys in self.provenance.items()}

    def canonical_json(self) -> str:
        return json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))

    # -- domain objects -------------------------------------------------------------

    def model(self) -> SourceModel:
        m = self.values["model"]
        return SourceModel(m["sigma_x2"], m["sigma_b2"], m["sigma_e2"])

    def margins(self) -> RateMargins:
        w = self.values["wz"]
        return RateMargins(w["delta1"], w["delta2"])

    def dict_seed(self) -> int:
        seed = self.values["code"]["dict_seed"]
        if seed is None:
            seed = derive_seed(self.values["sim"]["master_seed"], 0, Stream.DICTIONARY)
        return seed

    def code_params(self, m_inner: int | None = None) -> CodeParams:
        c = self.values["code"]
        return CodeParams(c["n"], c["l_sections"], c["m_per_section"],
                          c["m_inner"] if m_inner is None else m_inner,
                          c["amp_power"], self.dict_seed())

    def sweep_config(self) -> SweepConfig:
        s = self.values["sweep"]
        return SweepConfig(s["q_min"], s["q_max"], s["n_points"], s["log_spaced"],
                           s["alpha_fixed"], self.margins())

    def output_dir(self) -> str:
        d = self.values["output"]["directory"]
        return d if d is not None else os.environ.get(OUTPUT_DIR_ENV, "out")


def _read_structured(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.startswith("# sparcska"):
        for line in text.splitlines():
            if line.startswith("# config: "):
                text = line[len("# config: "):]
                break
        else:
            raise ConfigError(f"{path} has no '# config:' header line")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``.

    ``overrides`` maps ``(section, key)`` to a value and is recorded with
    provenance ``'flag'``.
    """
    cfg = RunConfig()
    if path is not None:
        for section, body in _read_structured(path).items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(body, dict):
                raise ConfigError(f"section {section!r} must be an object")
            for key, value in body.items():
                cfg.set(section, key, value, "file")
    for (section, key), value in (overrides or {}).items():
        cfg.set(section, key, value, "flag")
    return cfg
