"""Spatial/color similarity graphs and normalized Laplacians per image."""
from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag


def similarity_matrix(positions, colors, lambda_p: float, lambda_c: float,
                      threshold: float = 0.0) -> np.ndarray:
    """W_ab = exp(-lambda_p |p_a - p_b|^2 - lambda_c |c_a - c_b|^2).

    Entries below ``threshold`` are zeroed (the diagonal is always kept).
    """
    if lambda_p < 0 or lambda_c < 0:
        raise ValueError("lambda_p and lambda_c must be non-negative")
    p = np.asarray(positions, dtype=float)
    c = np.asarray(colors, dtype=float)
    dp = ((p[:, None, :] - p[None, :, :]) ** 2).sum(-1)
    dc = ((c[:, None, :] - c[None, :, :]) ** 2).sum(-1)
    W = np.exp(-lambda_p * dp - lambda_c * dc)
    if threshold > 0:
        W[W < threshold] = 0.0
        np.fill_diagonal(W, 1.0)
    return W


def normalized_laplacian(W) -> np.ndarray:
    """L = I - Q^{-1/2} W Q^{-1/2}, Q the diagonal degree matrix."""
    W = np.asarray(W, dtype=float)
    degree = W.sum(axis=1)
    if np.any(degree <= 0):
        raise ValueError("similarity matrix has a non-positive row sum")
    s = 1.0 / np.sqrt(degree)
    L = np.eye(W.shape[0]) - s[:, None] * W * s[None, :]
    return 0.5 * (L + L.T)


def assemble_block_laplacian(blocks) -> np.ndarray:
    """Block-diagonal L_s from per-image Laplacians, in image order."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("no Laplacian blocks")
    return block_diag(*blocks)


def image_laplacians(instances, lambda_p: float, lambda_c: float, threshold: float = 0.0):
    """Per-image Laplacian blocks of an InstanceSet."""
    out = []
    for im in instances.images:
        pos = [sp.position for sp in im.superpixels]
        col = [sp.color for sp in im.superpixels]
        out.append(normalized_laplacian(similarity_matrix(pos, col, lambda_p, lambda_c, threshold)))
    return out
