"""Edge-list parsing, trust-level mapping, and model (de)serialization.

Trust graphs arrive as TSV edge lists, one observation per line:
``trustor<TAB>trustee<TAB>value``.  The value is either a decimal rating
in [0, 1] or a named trust level resolved through a :class:`LevelMap`
(the default map covers the four advogato-style certification levels).
User ids are arbitrary strings and get dense 0-based indices in order of
first appearance.

Trained models are stored in a versioned binary container: magic bytes,
format version, dimensions, coefficients, bias terms, both factor
matrices row-major at full 64-bit precision, optional user labels, and a
trailing SHA-256 checksum.  Loading reproduces the model bit-exactly.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, TextIO

import numpy as np

from .core import BiasTerms, FactorModel, SparseTrustMatrix, observed_pairs
from .errors import (
    ChecksumError,
    ParseError,
    TruncatedStreamError,
    ValidationError,
    VersionMismatchError,
)

DEFAULT_LEVELS: tuple[tuple[str, float], ...] = (
    ("observer", 0.1),
    ("apprentice", 0.4),
    ("journeyer", 0.7),
    ("master", 0.9),
)

MODEL_MAGIC = b"TRUSTFAC"
MODEL_VERSION = 1


@dataclass(frozen=True)
class LevelMap:
    """Ordered, case-insensitive mapping from trust-level labels to ratings."""

    levels: tuple[tuple[str, float], ...] = DEFAULT_LEVELS

    def __post_init__(self):
        seen = set()
        for label, value in self.levels:
            key = label.casefold()
            if key in seen:
                raise ValidationError(f"duplicate trust level {label!r}")
            seen.add(key)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"level {label!r} maps to {value}, outside [0, 1]")

    def rating_for(self, label: str) -> float | None:
        key = label.casefold()
        for name, value in self.levels:
            if name.casefold() == key:
                return value
        return None

    @classmethod
    def parse(cls, spec: str) -> "LevelMap":
        """Build a map from a ``name=value,name=value`` override string."""
        levels = []
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            name, sep, value = item.partition("=")
            if not sep or not name.strip():
                raise ValidationError(f"malformed level override {item!r}, expected name=value")
            try:
                levels.append((name.strip(), float(value)))
            except ValueError:
                raise ValidationError(f"level {name.strip()!r} has non-numeric value {value!r}") from None
        if not levels:
            raise ValidationError("level override defines no levels")
        return cls(tuple(levels))


def _parse_rating(value: str, level_map: LevelMap, line_no: int) -> float:
    try:
        rating = float(value)
    except ValueError:
        mapped = level_map.rating_for(value)
        if mapped is None:
            raise ParseError(line_no, f"unknown trust level or malformed rating {value!r}")
        return mapped
    if math.isnan(rating) or not 0.0 <= rating <= 1.0:
        raise ParseError(line_no, f"rating {value!r} outside [0, 1]")
    return rating


def parse_edge_list(source: TextIO | Iterable[str], level_map: LevelMap | None = None) -> SparseTrustMatrix:
    """Parse a TSV trust edge list into a :class:`SparseTrustMatrix`.

    Blank lines and ``#`` comments are ignored, trailing whitespace is
    tolerated, and an optional ``trustor<TAB>trustee<TAB>...`` header is
    skipped.  Self-loops, duplicate pairs, out-of-range ratings, and
    unknown level labels raise :class:`ParseError` with the line number.
    """
    lm = level_map if level_map is not None else LevelMap()
    labels: list[str] = []
    index: dict[str, int] = {}
    seen: dict[tuple[int, int], int] = {}
    trustors: list[int] = []
    trustees: list[int] = []
    ratings: list[float] = []
    awaiting_header = True

    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if awaiting_header:
            awaiting_header = False
            if len(parts) >= 2 and parts[0].lower() == "trustor" and parts[1].lower() == "trustee":
                continue
        if len(parts) != 3 or not all(parts):
            raise ParseError(line_no, f"expected 3 tab-separated fields, got {len(parts)}")
        src, dst, value = parts
        if src == dst:
            raise ParseError(line_no, f"self-loop: {src!r} rates itself")
        rating = _parse_rating(value, lm, line_no)
        i = index.setdefault(src, len(labels))
        if i == len(labels):
            labels.append(src)
        j = index.setdefault(dst, len(labels))
        if j == len(labels):
            labels.append(dst)
        if (i, j) in seen:
            raise ParseError(
                line_no, f"duplicate pair {src!r} -> {dst!r} (first seen on line {seen[(i, j)]})"
            )
        seen[(i, j)] = line_no
        trustors.append(i)
        trustees.append(j)
        ratings.append(rating)

    return SparseTrustMatrix(len(labels), trustors, trustees, ratings, labels=tuple(labels) or None)


def write_edge_list(matrix: SparseTrustMatrix, sink: TextIO) -> None:
    """Inverse of :func:`parse_edge_list`; ratings use ``repr`` so they
    round-trip to the exact same float."""
    for i, j, rating in observed_pairs(matrix):
        sink.write(f"{matrix.label_of(i)}\t{matrix.label_of(j)}\t{rating!r}\n")


class _HashingWriter:
    def __init__(self, sink: BinaryIO):
        self.sink = sink
        self.digest = hashlib.sha256()

    def put(self, data: bytes) -> None:
        self.digest.update(data)
        self.sink.write(data)


def save_model(model: FactorModel, sink: BinaryIO) -> None:
    """Serialize a model to the versioned binary container format."""
    w = _HashingWriter(sink)
    w.put(MODEL_MAGIC)
    w.put(struct.pack("<I", MODEL_VERSION))
    w.put(struct.pack("<QQ", model.n_users, model.rank))
    w.put(np.ascontiguousarray(model.coefficients, dtype="<f8").tobytes())
    w.put(struct.pack("<d", model.bias.global_bias))
    w.put(np.ascontiguousarray(model.bias.trustor_bias, dtype="<f8").tobytes())
    w.put(np.ascontiguousarray(model.bias.trustee_bias, dtype="<f8").tobytes())
    w.put(np.ascontiguousarray(model.trustor_factors, dtype="<f8").tobytes())
    w.put(np.ascontiguousarray(model.trustee_factors, dtype="<f8").tobytes())
    if model.labels is None:
        w.put(struct.pack("<B", 0))
    else:
        w.put(struct.pack("<B", 1))
        for label in model.labels:
            encoded = label.encode("utf-8")
            w.put(struct.pack("<I", len(encoded)))
            w.put(encoded)
    sink.write(w.digest.digest())


class _HashingReader:
    def __init__(self, source: BinaryIO):
        self.source = source
        self.digest = hashlib.sha256()

    def take(self, count: int) -> bytes:
        data = self.source.read(count)
        if len(data) != count:
            raise TruncatedStreamError(
                f"model stream ended early: wanted {count} bytes, got {len(data)}"
            )
        self.digest.update(data)
        return data


def load_model(source: BinaryIO) -> FactorModel:
    """Read a model container written by :func:`save_model`.

    Raises :class:`VersionMismatchError` for bad magic bytes or an
    unsupported version, :class:`TruncatedStreamError` for short streams,
    and :class:`ChecksumError` when the payload fails verification.
    """
    r = _HashingReader(source)
    magic = r.take(len(MODEL_MAGIC))
    if magic != MODEL_MAGIC:
        raise VersionMismatchError(f"not a model container (magic {magic!r})")
    (version,) = struct.unpack("<I", r.take(4))
    if version != MODEL_VERSION:
        raise VersionMismatchError(f"unsupported container version {version}")
    n, rank = struct.unpack("<QQ", r.take(16))

    def floats(count: int) -> np.ndarray:
        return np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64)

    coefficients = floats(3)
    (global_bias,) = struct.unpack("<d", r.take(8))
    trustor_bias = floats(n)
    trustee_bias = floats(n)
    F = floats(n * rank).reshape(n, rank)
    G = floats(n * rank).reshape(n, rank)
    (has_labels,) = struct.unpack("<B", r.take(1))
    labels = None
    if has_labels:
        read = []
        for _ in range(n):
            (length,) = struct.unpack("<I", r.take(4))
            read.append(r.take(length).decode("utf-8"))
        labels = tuple(read)
    expected = r.digest.digest()
    stored = source.read(len(expected))
    if len(stored) != len(expected):
        raise TruncatedStreamError("model stream ended before its checksum")
    if stored != expected:
        raise ChecksumError("model payload does not match its checksum")
    return FactorModel(
        n_users=int(n),
        rank=int(rank),
        trustor_factors=F,
        trustee_factors=G,
        coefficients=coefficients,
        bias=BiasTerms(global_bias, trustor_bias, trustee_bias),
        labels=labels,
    )
