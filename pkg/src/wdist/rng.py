"""Seeded random streams.

All randomness in the package comes from numpy's Philox-4x64 generator, a
counter-based bit generator whose output depends only on its key, so the
same seed yields the same bytes on every platform. Independent streams are
derived from ``(seed, label, ...)`` through ``SeedSequence``; there is no
global state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _words(part):
    if isinstance(part, (tuple, list)):
        return [w for p in part for w in _words(p)]
    if isinstance(part, (int, np.integer)):
        return [int(part) & 0xFFFFFFFF]
    return [zlib.crc32(str(part).encode("utf-8"))]


def make_rng(seed, *stream):
    """Generator for ``seed`` and optional stream labels (ints, strings or tuples)."""
    entropy = _words(seed) + _words(list(stream))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
