"""Discriminative clustering with the square loss.

For a design matrix X (n x d) the optimal ridge-regression loss of fitting
labels y with an affine classifier is a quadratic form y^T D y with

    D = Pi (I_n - X (X^T Pi X + beta I_d)^{-1} X^T) Pi,   Pi = I_n - 11^T / n.

``ridge_loss_min`` solves the regression directly and serves as the oracle
for ``diffrac_matrix``.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def centering_projection(n: int) -> np.ndarray:
    """Return I_n - (1/n) 11^T."""
    if n < 1:
        raise ValueError("centering projection needs n >= 1")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _check_design(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("design matrix must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix has non-finite entries")
    return X


def diffrac_matrix(X, beta: float) -> np.ndarray:
    """Quadratic-form matrix D whose y^T D y is the minimal ridge loss for labels y."""
    X = _check_design(X)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    n, d = X.shape
    Xc = X - X.mean(axis=0)  # Pi X
    gram = Xc.T @ Xc + beta * np.eye(d)
    # I - Xc G^{-1} Xc^T; the outer Pi is applied explicitly
    inner = np.eye(n) - Xc @ cho_solve(cho_factor(gram), Xc.T)
    pi = centering_projection(n)
    D = pi @ inner @ pi
    return 0.5 * (D + D.T)


def ridge_loss_min(X, y, beta: float) -> float:
    """min over (w, b) of ||y - X w - b||^2 + beta ||w||^2, solved in closed form."""
    X = _check_design(X)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError(f"label vector has shape {y.shape}, expected ({X.shape[0]},)")
    d = X.shape[1]
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    w = np.linalg.solve(Xc.T @ Xc + beta * np.eye(d), Xc.T @ yc)
    b = np.mean(y - X @ w)
    r = y - X @ w - b
    return float(r @ r + beta * w @ w)
