"""Readers and writers for sample data, plus seeded synthetic blobs.

Supported formats:

* CSV: comma separated, no header, one sample per line.
* IDX (MNIST): big-endian magic ``0x00000803`` for unsigned-byte image
  stacks and ``0x00000801`` for label vectors, then one big-endian u32 per
  dimension, then the payload.
* CIFAR-10 binary: records of 3073 bytes, one label byte followed by the
  red, green and blue 32x32 planes.
* PGM (binary P5) for writing grayscale image tiles.

Pixel bytes are mapped to ``[0, 1]`` by dividing by 255.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import SampleBatch
from .exceptions import FormatError, InvalidArgument
from .rng import make_rng

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801
CIFAR_SIDE = 32
CIFAR_RECORD = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc


def load_csv(path):
    """Samples from a headerless comma-separated file."""
    text = _read_bytes(path).decode("utf-8", errors="strict")
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise FormatError(f"{path}: no samples")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if data.ndim != 2:
        raise FormatError(f"{path}: rows have different lengths")
    return SampleBatch(data)


def write_csv(path, batch):
    """Write rows with ``repr`` precision so a reload is exact."""
    data = getattr(batch, "data", batch)
    lines = [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(data)]
    Path(path).write_text("\n".join(lines) + "\n")


def _idx_header(raw, expected, path):
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected:
        raise FormatError(f"{path}: IDX magic {magic:#010x}, expected {expected:#010x}")
    ndim = magic & 0xFF
    end = 4 + 4 * ndim
    if len(raw) < end:
        raise FormatError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:end])
    count = int(np.prod(dims))
    if len(raw) - end != count:
        raise FormatError(f"{path}: payload has {len(raw) - end} bytes, header says {count}")
    return dims, np.frombuffer(raw, dtype=np.uint8, offset=end)


def load_idx(path):
    """Image stack from an IDX file, flattened row-major and scaled to ``[0, 1]``."""
    dims, payload = _idx_header(_read_bytes(path), IDX_IMAGES, path)
    n, h, w = dims
    return SampleBatch(payload.reshape(n, h * w) / 255.0, image_shape=(h, w, 1))


def load_idx_labels(path):
    """Label vector from an IDX file as ``uint8``."""
    _, payload = _idx_header(_read_bytes(path), IDX_LABELS, path)
    return payload.copy()


def _to_bytes(values):
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0) or np.any(values > 1):
        raise InvalidArgument("pixel values must lie in [0, 1]")
    return np.rint(255.0 * values).astype(np.uint8)


def write_idx(path, batch):
    """Write a batch with ``image_shape (h, w, 1)`` as an IDX image stack."""
    if batch.image_shape is None or batch.image_shape[2] != 1:
        raise InvalidArgument("IDX images need a single-channel image_shape")
    h, w, _ = batch.image_shape
    header = struct.pack(">IIII", IDX_IMAGES, batch.n, h, w)
    Path(path).write_bytes(header + _to_bytes(batch.data).tobytes())


def load_cifar10(path):
    """Images from a CIFAR-10 binary batch; labels are dropped.

    Rows keep the file's channel-major layout (all red, then green, then
    blue), which the returned batch records with ``channel_major=True``.
    """
    raw = _read_bytes(path)
    if len(raw) == 0 or len(raw) % CIFAR_RECORD:
        raise FormatError(f"{path}: length {len(raw)} is not a multiple of {CIFAR_RECORD}")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    return SampleBatch(
        records[:, 1:] / 255.0, image_shape=(CIFAR_SIDE, CIFAR_SIDE, 3), channel_major=True
    )


def write_pgm(path, image):
    """Write a 2-D array with values in ``[0, 1]`` as a binary P5 PGM."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise InvalidArgument(f"PGM needs a 2-D image, got shape {image.shape}")
    h, w = image.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + _to_bytes(image).tobytes())


def read_pgm(path):
    """Read a binary P5 PGM with maxval 255 back into ``[0, 1]``."""
    raw = _read_bytes(path)
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos)
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        fields.append(raw[start:pos])
    if fields[0] != b"P5" or fields[3] != b"255":
        raise FormatError(f"{path}: only binary 8-bit PGM is supported")
    w, h = int(fields[1]), int(fields[2])
    payload = raw[pos + 1 :]
    if len(payload) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w) / 255.0


def box_muller(rng, size):
    """Standard normal draws from pairs of uniforms.

    ``z = sqrt(-2 log u1) * cos(2 pi u2)`` and its sine partner; ``u1`` is
    taken from ``(0, 1]`` so the logarithm is finite.
    """
    half = (int(size) + 1) // 2
    u1 = 1.0 - rng.random(half)
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[: int(size)]


def synth_blobs(centers, scale, n_per, seed=0):
    """Isotropic Gaussian samples around each center, grouped by center.

    Randomness comes from the Philox counter-based generator keyed by
    ``seed``, so the output bytes are identical on every platform.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if not scale > 0:
        raise InvalidArgument(f"scale must be > 0, got {scale}")
    if int(n_per) != n_per or n_per < 1:
        raise InvalidArgument(f"n_per must be a positive integer, got {n_per!r}")
    k, d = centers.shape
    rng = make_rng(seed, "blobs")
    noise = box_muller(rng, k * int(n_per) * d).reshape(k, int(n_per), d)
    return SampleBatch((centers[:, None, :] + scale * noise).reshape(-1, d))


@dataclass(frozen=True)
class DatasetSource:
    """Where a batch comes from: a file or synthetic blob parameters."""

    kind: str
    path: Optional[str] = None
    centers: tuple = ((0.25, 0.25), (0.75, 0.75))
    scale: float = 0.05
    n_per: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("csv", "idx", "cifar10", "synthetic-blobs"):
            raise InvalidArgument(f"unknown dataset kind {self.kind!r}")
        if self.kind != "synthetic-blobs" and self.path is None:
            raise InvalidArgument(f"{self.kind} source needs a path")

    def load(self):
        if self.kind == "csv":
            return load_csv(self.path)
        if self.kind == "idx":
            return load_idx(self.path)
        if self.kind == "cifar10":
            return load_cifar10(self.path)
        return synth_blobs(self.centers, self.scale, self.n_per, self.seed)
