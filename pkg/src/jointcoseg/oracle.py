"""Exhaustive integer oracle for the joint problem.

Everything here works from the instance and the energy ingredients directly
and keeps the box-local superpixel copies x_i explicit, so it does not share
code with ``qp.assemble``.
"""
from __future__ import annotations

import itertools
from math import prod

import numpy as np

from .instance import Hyperparams, ImageInstance, InstanceSet
from .qp import Labeling, ProblemMatrices
from .solver import InfeasibleError

MAX_ENUMERATION = 10 ** 7
FEAS_TOL = 1e-9


class InstanceTooLarge(ValueError):
    pass


def energy(mats: ProblemMatrices, hp: Hyperparams, y, z) -> float:
    """Joint energy evaluated term by term."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    seg = y @ mats.D_s @ y + hp.alpha * (y @ mats.L_s @ y)
    loc = z @ mats.D_b @ z
    return float(seg + loc + hp.nu * (y @ mats.s_s) + hp.mu * (z @ mats.s_b))


def box_copies(im: ImageInstance, y) -> list[np.ndarray]:
    """x_i = P_i y for every box, members in sorted order."""
    y = np.asarray(y)
    return [y[sorted(box.members)] for box in im.boxes]


def explicit_feasible(im: ImageInstance, gamma: float, y, z, x=None, tol: float = FEAS_TOL) -> bool:
    """Check one image's (y, z, x) against the box, superpixel, projection and one-box rules.

    ``x`` defaults to the projected copies. Superpixels outside every box
    must be background.
    """
    y = np.asarray(y)
    z = np.asarray(z)
    if x is None:
        x = box_copies(im, y)
    # projection: x_i = P_i y
    for box, xi in zip(im.boxes, x):
        if not np.array_equal(np.asarray(xi), y[sorted(box.members)]):
            return False
    # box fraction bounds
    for box, xi, zi in zip(im.boxes, x, z):
        size = len(box.members)
        total = float(np.sum(xi))
        if total < gamma * size * zi - tol or total > (1 - gamma) * size * zi + tol:
            return False
    # superpixel rule: sum over containing boxes of x_ij <= sum of their z_i
    lhs = np.zeros(im.n)
    rhs = np.zeros(im.n)
    covered = np.zeros(im.n, dtype=bool)
    for box, xi, zi in zip(im.boxes, x, z):
        for r, j in enumerate(sorted(box.members)):
            lhs[j] += xi[r]
            rhs[j] += zi
            covered[j] = True
    if np.any(lhs > rhs + tol):
        return False
    if np.any(y[~covered] != 0):
        return False
    # exactly one box
    return abs(float(np.sum(z)) - 1.0) <= tol


def _image_feasible_set(im: ImageInstance, gamma: float) -> np.ndarray:
    """All feasible integer (y, z) rows of one image, lexicographically sorted."""
    # vectorized over all 2^n label vectors; same rules as explicit_feasible
    Y = np.array(list(itertools.product((0, 1), repeat=im.n)), dtype=int).reshape(-1, im.n)
    X = [Y[:, sorted(box.members)] for box in im.boxes]
    sizes = np.array([len(box.members) for box in im.boxes])
    sums = np.stack([xi.sum(axis=1) for xi in X], axis=1)
    covered = im.box_counts() > 0
    orphan_ok = np.all(Y[:, ~covered] == 0, axis=1)
    rows = []
    for k in range(im.m):
        z = np.zeros(im.m, dtype=int)
        z[k] = 1
        ok = orphan_ok.copy()
        ok &= np.all(sums >= gamma * sizes * z - FEAS_TOL, axis=1)
        ok &= np.all(sums <= (1 - gamma) * sizes * z + FEAS_TOL, axis=1)
        lhs = np.zeros(Y.shape, dtype=float)
        rhs = np.zeros(im.n)
        for box, xi, zi in zip(im.boxes, X, z):
            members = sorted(box.members)
            lhs[:, members] += xi
            rhs[members] += zi
        ok &= np.all(lhs <= rhs + FEAS_TOL, axis=1)
        for y in Y[ok]:
            rows.append(np.concatenate([y, z]))
    if not rows:
        return np.zeros((0, im.n + im.m), dtype=int)
    rows = np.array(rows, dtype=int)
    return rows[np.lexsort(rows.T[::-1])]


def enumeration_size(instances: InstanceSet) -> int:
    return prod(im.m * 2 ** im.n for im in instances.images)


def brute_force(instances: InstanceSet, mats: ProblemMatrices, hp: Hyperparams,
                limit: int = MAX_ENUMERATION) -> tuple[Labeling, float]:
    """Global integer minimizer of the joint energy.

    Ties are resolved towards the lexicographically smallest u = [y; z].
    Raises InfeasibleError when no integer assignment exists.
    """
    size = enumeration_size(instances)
    if size > limit:
        raise InstanceTooLarge(f"enumeration size {size} exceeds {limit}")
    feas = [_image_feasible_set(im, hp.gamma) for im in instances.images]
    for i, f in enumerate(feas):
        if len(f) == 0:
            raise InfeasibleError(f"image {i} has no feasible integer assignment")

    K = len(instances.images)
    sp_off = instances.superpixel_offsets()
    box_off = instances.box_offsets()
    n = instances.n_total
    Q = mats.D_s + hp.alpha * mats.L_s

    # global column indices of each image's local (y, z) block
    cols = [np.concatenate([np.arange(sp_off[i], sp_off[i + 1]),
                            n + np.arange(box_off[i], box_off[i + 1])]) for i in range(K)]
    N = n + instances.m_total
    H = np.zeros((N, N))
    H[:n, :n] = Q
    H[n:, n:] = mats.D_b
    lin = np.concatenate([hp.nu * mats.s_s, hp.mu * mats.s_b])

    # E(u) = sum_i unary_i + sum_{i<j} 2 u_i^T H_ij u_j, summed by broadcasting
    shape = tuple(len(f) for f in feas)
    total = np.zeros(shape)
    for i in range(K):
        U = feas[i].astype(float)
        Hii = H[np.ix_(cols[i], cols[i])]
        unary = np.einsum("ka,ab,kb->k", U, Hii, U) + U @ lin[cols[i]]
        total += unary.reshape([-1 if a == i else 1 for a in range(K)])
        for j in range(i + 1, K):
            V = 2.0 * U @ H[np.ix_(cols[i], cols[j])] @ feas[j].astype(float).T
            total += V.reshape([len(feas[i]) if a == i else len(feas[j]) if a == j else 1 for a in range(K)])

    best = total.min()
    ties = np.argwhere(total <= best + 1e-12 * max(1.0, abs(best)))
    candidates = []
    for idx in ties:
        u = np.zeros(N, dtype=int)
        for i, k in enumerate(idx):
            u[cols[i]] = feas[i][k]
        candidates.append(u)
    cand = np.array(candidates)
    order = np.lexsort(cand.T[::-1])
    u = cand[order[0]]

    y, z = u[:n], u[n:]
    labeling = Labeling(
        chosen_box=[int(np.argmax(z[box_off[i]:box_off[i + 1]])) for i in range(K)],
        labels=[y[sp_off[i]:sp_off[i + 1]].copy() for i in range(K)],
        relaxed_y=[y[sp_off[i]:sp_off[i + 1]].astype(float) for i in range(K)],
        relaxed_z=[z[box_off[i]:box_off[i + 1]].astype(float) for i in range(K)],
    )
    return labeling, energy(mats, hp, y, z)


def system_feasible(qp, u, tol: float = FEAS_TOL) -> bool:
    """Whether u satisfies an assembled constraint system (bounds included)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < qp.lb - tol) or np.any(u > qp.ub + tol):
        return False
    if qp.A_ub.size and np.any(qp.A_ub @ u > qp.b_ub + tol):
        return False
    if qp.A_eq.size and np.any(np.abs(qp.A_eq @ u - qp.b_eq) > tol):
        return False
    return True
