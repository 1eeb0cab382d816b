"""Binary transcript files.

Layout: the magic line ``SPARCSKA-TRANSCRIPT 1``, one line of JSON header
(config echo, record count and field table), then fixed-width records,
one per session, little-endian throughout. Bin messages and coefficient
vectors are L unsigned 32-bit integers; keys are packed big-endian bits.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .codebook import BinMessage, SparseCoeffs
from .errors import ShapeError
from .protocol import SessionTranscript

__all__ = ["MAGIC", "record_fields", "write_transcripts", "read_transcripts"]

MAGIC = b"SPARCSKA-TRANSCRIPT 1\n"
_SEED_KEYS = ("master", "trial", "source", "noise_b", "noise_e", "dither", "hash", "dictionary")


def record_fields(n: int, l_sections: int, key_bits: int) -> list[tuple[str, str, int]]:
    key_bytes = math.ceil(key_bits / 8)
    return [
        ("x", "<f8", n), ("y", "<f8", n), ("z", "<f8", n),
        ("beta_a", "<u4", l_sections), ("bin", "<u4", l_sections),
        ("beta_b_hat", "<u4", l_sections), ("beta_e_hat", "<u4", l_sections),
        ("amplitude", "<f8", 1),
        ("key_a", "u1", key_bytes), ("key_b", "u1", key_bytes), ("key_e", "u1", key_bytes),
        ("eve_stat", "u1", 1), ("distortion", "<f8", 1),
        ("seeds", "<u8", len(_SEED_KEYS)),
    ]


def _record_dtype(fields) -> np.dtype:
    return np.dtype([(name, code, (count,)) for name, code, count in fields])


def write_transcripts(path, transcripts: list[SessionTranscript], config: dict | None = None) -> None:
    if not transcripts:
        raise ShapeError("no transcripts to write")
    first = transcripts[0]
    n, l_sections, key_bits = first.x.size, len(first.beta_a.sections), first.key_a.size
    fields = record_fields(n, l_sections, key_bits)
    dtype = _record_dtype(fields)
    records = np.zeros(len(transcripts), dtype=dtype)
    for i, t in enumerate(transcripts):
        rec = records[i]
        rec["x"], rec["y"], rec["z"] = t.x, t.y, t.z
        rec["beta_a"] = t.beta_a.sections
        rec["bin"] = t.bin.sub_sections
        rec["beta_b_hat"] = t.beta_b_hat.sections
        rec["beta_e_hat"] = t.beta_e_hat.sections
        rec["amplitude"] = t.beta_a.amplitude
        for name in ("key_a", "key_b", "key_e"):
            rec[name] = np.packbits(getattr(t, name)) if key_bits else []
        rec["eve_stat"] = t.eve_stat
        rec["distortion"] = t.distortion
        rec["seeds"] = [t.seeds[k] for k in _SEED_KEYS]
    header = {
        "config": config or {},
        "count": len(transcripts),
        "n": n,
        "l_sections": l_sections,
        "key_bits": key_bits,
        "fields": [list(f) for f in fields],
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        fh.write(records.tobytes())


def read_transcripts(path) -> tuple[dict, list[SessionTranscript]]:
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ShapeError(f"{path} is not a transcript file")
        header = json.loads(fh.readline())
        payload = fh.read()
    fields = [tuple(f) for f in header["fields"]]
    records = np.frombuffer(payload, dtype=_record_dtype(fields), count=header["count"])
    k = header["key_bits"]
    out = []
    for rec in records:
        amp = float(rec["amplitude"][0])
        keys = [np.unpackbits(rec[name])[:k] if k else np.zeros(0, dtype=np.uint8)
                for name in ("key_a", "key_b", "key_e")]
        out.append(SessionTranscript(
            x=rec["x"].copy(), y=rec["y"].copy(), z=rec["z"].copy(),
            beta_a=SparseCoeffs(rec["beta_a"], amp),
            bin=BinMessage(rec["bin"]),
            beta_b_hat=SparseCoeffs(rec["beta_b_hat"], amp),
            beta_e_hat=SparseCoeffs(rec["beta_e_hat"], amp),
            key_a=keys[0], key_b=keys[1], key_e=keys[2],
            eve_stat=int(rec["eve_stat"][0]),
            distortion=float(rec["distortion"][0]),
            seeds={key: int(v) for key, v in zip(_SEED_KEYS, rec["seeds"])},
        ))
    return header, out
