"""Ground cost matrices between two sample batches."""

from __future__ import annotations

import enum

import numpy as np
from scipy.spatial.distance import cdist

from .core import CostMatrix, SampleBatch
from .exceptions import DegenerateInput, InvalidArgument

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_RANGE = 1.0
SSIM_K1, SSIM_K2 = 0.01, 0.03


class CostKind(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"
    SQUARED_L2 = "sql2"
    COSINE = "cosine"
    SSIM = "ssim"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgument(
                f"unknown cost kind {value!r}; choose from {[k.value for k in cls]}"
            ) from None


_CDIST_METRIC = {
    CostKind.L1: "cityblock",
    CostKind.L2: "euclidean",
    CostKind.SQUARED_L2: "sqeuclidean",
    CostKind.COSINE: "cosine",
}


def _as_batch(X):
    return X if isinstance(X, SampleBatch) else SampleBatch(np.atleast_2d(X))


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Normalized 2-D Gaussian weights of shape ``(size, size)``."""
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _window_patches(images, win):
    """Stack every ``win x win`` window: ``(n, h, w, c) -> (n, P, win*win, c)``."""
    n, h, w, ch = images.shape
    view = np.lib.stride_tricks.sliding_window_view(images, (win, win), axis=(1, 2))
    # view: (n, h-win+1, w-win+1, c, win, win)
    view = np.moveaxis(view, 3, -1)
    return view.reshape(n, -1, win * win, ch)


def _ssim_stats(images):
    """Windowed weights and patches for a batch of ``(n, h, w, c)`` images."""
    _, h, w, _ = images.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        # one global window with uniform weights
        patches = images.reshape(images.shape[0], 1, h * w, images.shape[3])
        weights = np.full(h * w, 1.0 / (h * w))
    else:
        patches = _window_patches(images, SSIM_WINDOW)
        weights = gaussian_window().ravel()
    return patches, weights


def ssim_matrix(X, Y):
    """Mean SSIM between every row of ``X`` and every row of ``Y``.

    Both batches must carry the same ``image_shape``. Statistics use the
    Gaussian-weighted windows that fit entirely inside the image; the MSSIM
    is the mean over windows and channels.
    """
    if X.image_shape is None or Y.image_shape is None or X.image_shape != Y.image_shape:
        raise InvalidArgument("SSIM needs both batches to carry the same image_shape")
    px, wts = _ssim_stats(X.images())
    py, _ = _ssim_stats(Y.images())
    c1 = (SSIM_K1 * SSIM_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_RANGE) ** 2

    mx = np.einsum("k,npkc->npc", wts, px)
    my = np.einsum("k,npkc->npc", wts, py)
    vx = np.einsum("k,npkc->npc", wts, px**2) - mx**2
    vy = np.einsum("k,npkc->npc", wts, py**2) - my**2

    n, m = px.shape[0], py.shape[0]
    out = np.empty((n, m))
    wpx = px * wts[None, None, :, None]
    for i in range(n):
        # cross moments of row i against all of Y: (m, P, c)
        exy = np.einsum("pkc,mpkc->mpc", wpx[i], py)
        cov = exy - mx[i][None] * my
        num = (2 * mx[i][None] * my + c1) * (2 * cov + c2)
        den = (mx[i][None] ** 2 + my**2 + c1) * (vx[i][None] + vy + c2)
        out[i] = (num / den).mean(axis=(1, 2))
    return out


def pairwise_cost(X, Y, kind=CostKind.SQUARED_L2):
    """Cost matrix ``C[i, j] = c(X[i], Y[j])``.

    Supported kinds: ``l1`` (sum of absolute differences), ``l2`` (Euclidean
    norm), ``sql2`` (squared Euclidean), ``cosine`` (one minus cosine
    similarity) and ``ssim`` (one minus mean SSIM). Negative round-off is
    clamped to zero.

    Raises
    ------
    InvalidArgument
        On a feature dimension mismatch or SSIM without matching image shapes.
    DegenerateInput
        For the cosine cost when a row has zero norm.
    """
    X, Y = _as_batch(X), _as_batch(Y)
    kind = CostKind.parse(kind)
    if X.d != Y.d:
        raise InvalidArgument(f"feature dimensions differ: {X.d} vs {Y.d}")

    if kind is CostKind.SSIM:
        values = 1.0 - ssim_matrix(X, Y)
    else:
        if kind is CostKind.COSINE:
            if np.any(np.linalg.norm(X.data, axis=1) == 0) or np.any(
                np.linalg.norm(Y.data, axis=1) == 0
            ):
                raise DegenerateInput("cosine cost is undefined for zero-norm samples")
        values = cdist(X.data, Y.data, metric=_CDIST_METRIC[kind])
    return CostMatrix(np.maximum(values, 0.0), kind=kind.value)
