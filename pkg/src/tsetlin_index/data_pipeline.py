"""Turning images and text into bit matrices, and storing them."""

from __future__ import annotations

import gzip
import json
import re
import struct
import zlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ChecksumError, DatasetFormatError, ShapeError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class BinarizeSpec:
    bits: int = 1
    thresholds: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.bits <= 4:
            raise ValueError(f"bits must be in [1, 4], got {self.bits}")
        if self.thresholds is None:
            # evenly spaced grey levels
            levels = tuple(int(round(255 * t / (self.bits + 1))) for t in range(1, self.bits + 1))
            object.__setattr__(self, "thresholds", levels)
        else:
            object.__setattr__(self, "thresholds", tuple(int(t) for t in self.thresholds))
        t = self.thresholds
        if len(t) != self.bits:
            raise ValueError(f"{self.bits} bits need {self.bits} thresholds, got {len(t)}")
        if any(v < 1 or v > 255 for v in t) or any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError(f"thresholds must be strictly ascending in [1, 255], got {t}")


@dataclass
class BoolDataset:
    features: np.ndarray
    labels: np.ndarray
    m: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.uint8)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError("one label per row required")
        if self.features.size and self.features.max() > 1:
            raise ValueError("features must be 0/1")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.m):
            raise ValueError(f"labels must lie in [0, {self.m})")
        bits = self.provenance.get("bits")
        if bits and self.o % bits:
            raise ShapeError(f"width {self.o} is not a multiple of bits={bits}")

    @property
    def o(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BoolDataset):
            return NotImplemented
        return (self.m == other.m and self.provenance == other.provenance
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))


def _infer_m(labels, m):
    labels = np.asarray(labels, dtype=np.int64)
    if m is None:
        m = int(labels.max()) + 1 if len(labels) else 1
    return labels, m


def binarize_images(pixels, spec: BinarizeSpec, labels=None, m: int | None = None,
                    source: str = "") -> BoolDataset:
    """Thermometer-encode grey pixels: bit (p, t) is set iff pixel p >= thresholds[t].

    Output columns are pixel-major, so pixel p occupies columns
    ``p * bits .. p * bits + bits - 1``.
    """
    pixels = np.asarray(pixels)
    if pixels.ndim == 3:
        pixels = pixels.reshape(pixels.shape[0], -1)
    if pixels.ndim != 2 or pixels.size == 0:
        raise ShapeError(f"expected a non-empty (images, pixels) matrix, got shape {pixels.shape}")
    if pixels.min() < 0 or pixels.max() > 255:
        raise ValueError("pixel values must lie in 0..255")
    thresholds = np.asarray(spec.thresholds, dtype=np.int32)
    bits = pixels.astype(np.int32)[:, :, None] >= thresholds[None, None, :]
    features = bits.reshape(pixels.shape[0], -1).astype(np.uint8)
    if labels is None:
        labels = np.zeros(pixels.shape[0], dtype=np.int64)
    labels, m = _infer_m(labels, m)
    prov = {"source": source, "kind": "image", "bits": spec.bits, "thresholds": list(spec.thresholds)}
    return BoolDataset(features, labels, m, prov)


_TOKEN = re.compile(r"[a-z0-9']+")


def tokenize(document: str) -> list[str]:
    return _TOKEN.findall(document.lower())


def build_vocabulary(documents: Iterable[str], size: int) -> list[str]:
    """Top ``size`` unigrams by document frequency; ties go to the smaller token."""
    if size < 1:
        raise ValueError("vocabulary size must be positive")
    df = Counter()
    for doc in documents:
        df.update(set(tokenize(doc)))
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:size]]


def vectorize_text(documents: Sequence[str], vocabulary: Sequence[str], labels=None,
                   m: int | None = None, source: str = "") -> BoolDataset:
    """Set-of-words vectors: bit v is set iff vocabulary[v] occurs in the document."""
    if len(vocabulary) == 0:
        raise ValueError("empty vocabulary")
    slot = {tok: v for v, tok in enumerate(vocabulary)}
    if len(slot) != len(vocabulary):
        raise ValueError("vocabulary contains duplicates")
    features = np.zeros((len(documents), len(vocabulary)), dtype=np.uint8)
    for row, doc in enumerate(documents):
        cols = [slot[t] for t in set(tokenize(doc)) if t in slot]
        features[row, cols] = 1
    if labels is None:
        labels = np.zeros(len(documents), dtype=np.int64)
    labels, m = _infer_m(labels, m)
    prov = {"source": source, "kind": "text", "vocabulary_size": len(vocabulary)}
    return BoolDataset(features, labels, m, prov)


def save_vocabulary(path, vocabulary: Sequence[str]) -> None:
    Path(path).write_text("".join(tok + "\n" for tok in vocabulary), encoding="utf-8")


def load_vocabulary(path) -> list[str]:
    return [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line]


# --- IDX containers ---------------------------------------------------------


def _read_maybe_gzip(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _read_idx(path, magic: int, ndim: int) -> np.ndarray:
    data = _read_maybe_gzip(path)
    if len(data) < 4:
        raise DatasetFormatError(f"{path}: truncated header")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise DatasetFormatError(f"{path}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    head = 4 + 4 * ndim
    if len(data) < head:
        raise DatasetFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", data[4:head])
    expected = int(np.prod(dims))
    body = len(data) - head
    if body < expected:
        raise DatasetFormatError(f"{path}: truncated, {body} of {expected} bytes present")
    if body > expected:
        raise DatasetFormatError(f"{path}: dimension mismatch, {body - expected} trailing bytes")
    return np.frombuffer(data, dtype=np.uint8, offset=head).reshape(dims)


def load_idx_images(path) -> np.ndarray:
    """(images, rows * cols) uint8 matrix from an IDX3 file (gzip allowed)."""
    images = _read_idx(path, IDX_IMAGES_MAGIC, 3)
    return images.reshape(images.shape[0], -1).copy()


def load_labels(path, m: int | None = None) -> np.ndarray:
    labels = _read_idx(path, IDX_LABELS_MAGIC, 1).astype(np.int64)
    if m is not None and len(labels) and (labels.min() < 0 or labels.max() >= m):
        raise ValueError(f"{path}: label outside [0, {m})")
    return labels


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    data = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes()
    Path(path).write_bytes(gzip.compress(data) if str(path).endswith(".gz") else data)


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    data = struct.pack(">II", IDX_LABELS_MAGIC, len(labels)) + labels.tobytes()
    Path(path).write_bytes(gzip.compress(data) if str(path).endswith(".gz") else data)


# --- dataset files ----------------------------------------------------------

DATASET_MAGIC = b"TMDS"
DATASET_VERSION = 1
_PREFIX = struct.Struct("<4sHI")


def save_dataset(path, ds: BoolDataset) -> None:
    """magic, version, JSON header length, JSON header, packed bits, int32 labels, CRC32."""
    header = {"rows": len(ds), "o": ds.o, "m": ds.m, "provenance": ds.provenance}
    head = json.dumps(header, sort_keys=True).encode()
    payload = (_PREFIX.pack(DATASET_MAGIC, DATASET_VERSION, len(head)) + head
               + np.packbits(ds.features, axis=1).tobytes()
               + ds.labels.astype("<i4").tobytes())
    Path(path).write_bytes(payload + struct.pack("<I", zlib.crc32(payload)))


def load_dataset(path) -> BoolDataset:
    data = Path(path).read_bytes()
    if len(data) < _PREFIX.size + 4:
        raise DatasetFormatError(f"{path}: truncated")
    magic, version, hlen = _PREFIX.unpack_from(data)
    if magic != DATASET_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError(f"{path}: checksum mismatch")
    header = json.loads(payload[_PREFIX.size:_PREFIX.size + hlen])
    rows, o, m = header["rows"], header["o"], header["m"]
    bits = header["provenance"].get("bits")
    if bits and o % bits:
        raise DatasetFormatError(f"{path}: width {o} not divisible by bits={bits}")
    off = _PREFIX.size + hlen
    row_bytes = (o + 7) // 8
    need = rows * row_bytes + 4 * rows
    if len(payload) - off != need:
        raise DatasetFormatError(f"{path}: body holds {len(payload) - off} bytes, header implies {need}")
    packed = np.frombuffer(payload, dtype=np.uint8, count=rows * row_bytes, offset=off)
    features = np.unpackbits(packed.reshape(rows, row_bytes), axis=1, count=o)
    labels = np.frombuffer(payload, dtype="<i4", count=rows, offset=off + rows * row_bytes)
    return BoolDataset(features, labels, m, header["provenance"])


def noisy_xor(count: int, o: int = 12, noise: float = 0.1, rng=None) -> BoolDataset:
    """Random bits with label x0 XOR x1, flipped with probability ``noise``."""
    rng = np.random.default_rng(rng)
    X = rng.integers(0, 2, size=(count, o), dtype=np.uint8)
    y = X[:, 0] ^ X[:, 1]
    flip = rng.random(count) < noise
    y = np.where(flip, 1 - y, y)
    return BoolDataset(X, y, 2, {"source": "noisy-xor", "kind": "synthetic", "noise": noise})
