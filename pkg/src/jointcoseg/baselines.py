"""The joint model and the reference baselines behind one ``run`` entry point.

joint     joint box + superpixel QP
b1        superpixel discriminative + Laplacian QP with foreground-fraction bounds
b2        most salient superpixels up to a pixel fraction
b3        b1 plus the superpixel saliency term
sal       most salient box per image
sal_disc  box discriminative QP plus box saliency, one box per image
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .instance import Hyperparams, InstanceSet
from .metrics import MetricsReport, evaluate
from .oracle import energy
from .qp import (JointQp, Labeling, ProblemMatrices, assemble, build_matrices,
                 round_boxes, round_solution, round_superpixels, split_y, split_z)
from .solver import InfeasibleError, SolverConfig, Status, solve


class BaselineMode(str, Enum):
    JOINT = "joint"
    B1 = "b1"
    B2 = "b2"
    B3 = "b3"
    SAL = "sal"
    SAL_DISC = "sal_disc"

    @classmethod
    def parse(cls, text: str) -> "BaselineMode":
        return cls(text.replace("-", "_").lower())


def _solve_or_raise(qp, cfg):
    sol = solve(qp, cfg)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleError("relaxed problem is infeasible")
    return sol


def _segmentation_qp(instances: InstanceSet, mats: ProblemMatrices, hp: Hyperparams, saliency: bool) -> JointQp:
    n = instances.n_total
    M = mats.D_s + hp.alpha * mats.L_s
    c = hp.nu * mats.s_s if saliency else np.zeros(n)
    lo, hi = hp.fg_bounds
    off = instances.superpixel_offsets()
    rows, rhs = [], []
    for i, im in enumerate(instances.images):
        pix = np.array([sp.pixel_count for sp in im.superpixels], dtype=float)
        total = pix.sum()
        row = np.zeros(n)
        row[off[i]:off[i + 1]] = pix
        rows += [row, -row]
        rhs += [hi * total, -lo * total]
    return JointQp(
        M=0.5 * (M + M.T), c=c,
        A_ub=np.array(rows), b_ub=np.array(rhs),
        A_eq=np.zeros((0, n)), b_eq=np.zeros(0),
        lb=np.zeros(n), ub=np.ones(n), n_y=n,
    )


def _box_qp(instances: InstanceSet, mats: ProblemMatrices, hp: Hyperparams) -> JointQp:
    m = instances.m_total
    off = instances.box_offsets()
    A_eq = np.zeros((len(instances.images), m))
    for i in range(len(instances.images)):
        A_eq[i, off[i]:off[i + 1]] = 1.0
    return JointQp(
        M=0.5 * (mats.D_b + mats.D_b.T), c=hp.mu * mats.s_b,
        A_ub=np.zeros((0, m)), b_ub=np.zeros(0),
        A_eq=A_eq, b_eq=np.ones(len(instances.images)),
        lb=np.zeros(m), ub=np.ones(m),
    )


def most_salient_pixels(costs, pixel_counts, fraction: float) -> np.ndarray:
    """Greedy lowest-cost selection until the selected pixels reach ``fraction`` of the image.

    Ties in cost keep superpixel order.
    """
    costs = np.asarray(costs, dtype=float)
    pix = np.asarray(pixel_counts, dtype=float)
    need = fraction * pix.sum()
    labels = np.zeros(costs.size, dtype=int)
    got = 0.0
    for j in np.argsort(costs, kind="stable"):
        if got >= need:
            break
        labels[j] = 1
        got += pix[j]
    return labels


def _empty(instances):
    k = len(instances.images)
    return [None] * k


def run(mode, instances: InstanceSet, hp: Hyperparams | None = None,
        cfg: SolverConfig | None = None, mats: ProblemMatrices | None = None) -> tuple[Labeling, MetricsReport]:
    """Run one method and score it against whatever ground truth is present."""
    mode = BaselineMode.parse(mode) if isinstance(mode, str) else mode
    hp = hp or Hyperparams()
    cfg = cfg or SolverConfig()
    mats = mats or build_matrices(instances, hp)
    objective = relaxed = None

    if mode is BaselineMode.JOINT:
        qp = assemble(instances, mats, hp)
        sol = _solve_or_raise(qp, cfg)
        labeling = round_solution(sol.u, instances)
        y = labeling.foreground()
        z = np.concatenate([np.eye(im.m)[k] for im, k in zip(instances.images, labeling.chosen_box)])
        relaxed = sol.objective
        objective = energy(mats, hp, y, z)
    elif mode in (BaselineMode.B1, BaselineMode.B3):
        qp = _segmentation_qp(instances, mats, hp, saliency=mode is BaselineMode.B3)
        sol = _solve_or_raise(qp, cfg)
        ys = split_y(instances, sol.u)
        labels = round_superpixels(ys, instances, force_orphans=False)
        labeling = Labeling(_empty(instances), labels, ys, _empty(instances))
        y = labeling.foreground()
        relaxed = sol.objective
        objective = float(y @ qp.M @ y + qp.c @ y)
    elif mode is BaselineMode.B2:
        costs = split_y(instances, mats.s_s)
        labels = [most_salient_pixels(c, [sp.pixel_count for sp in im.superpixels], hp.baseline_fraction)
                  for c, im in zip(costs, instances.images)]
        labeling = Labeling(_empty(instances), labels, [l.astype(float) for l in labels], _empty(instances))
        objective = float(labeling.foreground() @ mats.s_s)
    elif mode is BaselineMode.SAL:
        zs = split_z(instances, mats.s_b)
        chosen = [int(np.argmin(c)) for c in zs]
        labeling = Labeling(chosen, _empty(instances), _empty(instances),
                            [np.eye(len(c))[k] for c, k in zip(zs, chosen)])
        objective = float(sum(c[k] for c, k in zip(zs, chosen)))
    elif mode is BaselineMode.SAL_DISC:
        qp = _box_qp(instances, mats, hp)
        sol = _solve_or_raise(qp, cfg)
        zs = split_z(instances, sol.u)
        chosen = round_boxes(zs)
        labeling = Labeling(chosen, _empty(instances), _empty(instances), zs)
        z = np.concatenate([np.eye(im.m)[k] for im, k in zip(instances.images, chosen)])
        relaxed = sol.objective
        objective = float(z @ qp.M @ z + qp.c @ z)
    else:  # pragma: no cover
        raise ValueError(f"unknown mode {mode}")

    report = evaluate(labeling, instances)
    report.objective = objective
    report.relaxed_objective = relaxed
    if relaxed is not None:
        report.gap = objective - relaxed
    return labeling, report
