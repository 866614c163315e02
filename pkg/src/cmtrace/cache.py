"""Persistent JSON-lines cache for positive trace records.

A file that fails to parse anywhere is discarded as a whole and rebuilt.
"""
from __future__ import annotations

import json
import os
import threading
from fractions import Fraction
from pathlib import Path

import mpmath

from .traces import TraceRecord

CACHE_FORMAT = 1
ENV_VAR = "CMTRACE_CACHE"


def default_cache_path() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "cmtrace" / "traces.jsonl"


def _key(level: int, digest: str, D: int, normalization: str) -> tuple:
    return (level, digest, D, normalization)


def _exact(x) -> list[int]:
    """Lossless ``[mantissa, exponent]`` of a binary float."""
    sign, man, exp, _ = mpmath.mpf(x)._mpf_ if not hasattr(x, "_mpf_") else x._mpf_
    return [-int(man) if sign else int(man), int(exp)]


def _from_exact(pair) -> mpmath.mpf:
    man, exp = (int(x) for x in pair)
    with mpmath.workprec(max(53, man.bit_length())):
        return mpmath.mpf((man, exp))


def record_to_json(rec: TraceRecord) -> dict:
    return {
        "index": int(rec.index),
        "value": _exact(rec.value_numeric),
        "err": _exact(rec.error),
        "rounded": [rec.rounded.numerator, rec.rounded.denominator],
        "certified": rec.certified,
    }


def record_from_json(data: dict) -> TraceRecord:
    value = _from_exact(data["value"])
    err = _from_exact(data["err"])
    num, den = data["rounded"]
    return TraceRecord(Fraction(data["index"]), "positive", value_numeric=value, error=err,
                       rounded=Fraction(num, den), certified=bool(data["certified"]))


class TraceCache:
    """Maps ``(level, spec digest, D, normalization)`` to the most precise stored record."""

    def __init__(self, path: str | os.PathLike, version: str):
        self.path = Path(path)
        self.version = version
        self._lock = threading.Lock()
        self._entries: dict[tuple, tuple[int, dict]] = {}
        self.rebuilt = False
        self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        entries = {}
        try:
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    if row.get("format") != CACHE_FORMAT:
                        raise ValueError("unknown cache format")
                    k = row["key"]
                    key = _key(int(k["level"]), str(k["digest"]), int(k["D"]), str(k["normalization"]))
                    bits = int(k["bits"])
                    rec = row["record"]
                    record_from_json(rec)      # raises on a malformed payload
                    if key not in entries or entries[key][0] < bits:
                        entries[key] = (bits, rec)
        except (ValueError, KeyError, TypeError, OSError):
            self.rebuilt = True
            self.path.unlink(missing_ok=True)
            return
        self._entries = entries

    def get(self, level: int, digest: str, D: int, normalization: str, bits: int) -> TraceRecord | None:
        hit = self._entries.get(_key(level, digest, D, normalization))
        if hit is None or hit[0] < bits:
            return None
        return record_from_json(hit[1])

    def put(self, level: int, digest: str, normalization: str, bits: int, rec: TraceRecord) -> None:
        key = _key(level, digest, int(rec.index), normalization)
        payload = record_to_json(rec)
        row = {"format": CACHE_FORMAT, "version": self.version,
               "key": {"level": level, "digest": digest, "D": int(rec.index),
                       "normalization": normalization, "bits": bits},
               "record": payload}
        with self._lock:
            old = self._entries.get(key)
            if old is not None and old[0] >= bits:
                return
            self._entries[key] = (bits, payload)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self._entries)
