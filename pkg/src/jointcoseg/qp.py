"""Joint box/superpixel quadratic program: matrices, constraints, rounding.

Variables are stacked as u = [y; z] with y the superpixel indicators of all
images followed by z the box indicators of all images. The box-local copies
x_i = P_i y are substituted out, so every constraint is written on (y, z).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diffrac import diffrac_matrix
from .graph import assemble_block_laplacian, image_laplacians
from .instance import BoundingBox, Hyperparams, InstanceSet, saliency_to_cost


@dataclass(frozen=True)
class ProblemMatrices:
    """The ingredients of the joint energy, over all images."""

    D_s: np.ndarray
    L_s: np.ndarray
    D_b: np.ndarray
    s_s: np.ndarray
    s_b: np.ndarray


def build_matrices(instances: InstanceSet, hp: Hyperparams, laplacian_threshold: float = 0.0) -> ProblemMatrices:
    D_s = diffrac_matrix(instances.superpixel_features(), hp.beta_s)
    L_s = assemble_block_laplacian(
        image_laplacians(instances, hp.lambda_p, hp.lambda_c, laplacian_threshold))
    if instances.m_total >= 2:
        D_b = diffrac_matrix(instances.box_features(), hp.beta_b)
    else:
        D_b = np.zeros((instances.m_total, instances.m_total))
    return ProblemMatrices(
        D_s=D_s,
        L_s=L_s,
        D_b=D_b,
        s_s=saliency_to_cost(instances.superpixel_saliency(), hp.saliency_eps),
        s_b=saliency_to_cost(instances.box_saliency(), hp.saliency_eps),
    )


@dataclass(frozen=True)
class JointQp:
    """minimize u^T M u + c^T u  s.t.  A_ub u <= b_ub, A_eq u = b_eq, lb <= u <= ub."""

    M: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_names: tuple[str, ...] = ()
    n_y: int = 0
    sp_offsets: Optional[np.ndarray] = None
    box_offsets: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def y_index(self, image: int, sp: int) -> int:
        return int(self.sp_offsets[image] + sp)

    def z_index(self, image: int, box: int) -> int:
        return int(self.n_y + self.box_offsets[image] + box)


def projection_matrix(box: BoundingBox, n_i: int) -> np.ndarray:
    """|S_i| x n_i selector with P[r, j] = 1 iff j is the r-th (sorted) member."""
    members = sorted(box.members)
    P = np.zeros((len(members), n_i))
    P[np.arange(len(members)), members] = 1.0
    return P


def check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"gamma must lie in [0, 0.5) so the box fraction bounds are ordered, got {gamma}")


def assemble(instances: InstanceSet, mats: ProblemMatrices, hp: Hyperparams) -> JointQp:
    """Joint energy and the substituted constraint system."""
    check_gamma(hp.gamma)
    n, m = instances.n_total, instances.m_total
    shapes = {"D_s": (mats.D_s.shape, (n, n)), "L_s": (mats.L_s.shape, (n, n)),
              "D_b": (mats.D_b.shape, (m, m)), "s_s": (mats.s_s.shape, (n,)),
              "s_b": (mats.s_b.shape, (m,))}
    for name, (got, want) in shapes.items():
        if got != want:
            raise ValueError(f"{name} has shape {got}, expected {want}")

    N = n + m
    M = np.zeros((N, N))
    M[:n, :n] = mats.D_s + hp.alpha * mats.L_s
    M[n:, n:] = mats.D_b
    M = 0.5 * (M + M.T)
    c = np.concatenate([hp.nu * mats.s_s, hp.mu * mats.s_b])

    sp_off = instances.superpixel_offsets()
    box_off = instances.box_offsets()
    names = [f"y[{i},{a}]" for i, im in enumerate(instances.images) for a in range(im.n)]
    names += [f"z[{i},{b}]" for i, im in enumerate(instances.images) for b in range(im.m)]

    rows_ub = []
    rows_eq = []
    ub = np.ones(N)
    for i, im in enumerate(instances.images):
        zcol = n + box_off[i]
        # box fraction bounds: gamma|S| z <= sum_S y <= (1-gamma)|S| z
        for b, box in enumerate(im.boxes):
            size = len(box.members)
            cols = sp_off[i] + np.asarray(sorted(box.members))
            lower = np.zeros(N)
            lower[cols] = -1.0
            lower[zcol + b] = hp.gamma * size
            upper = np.zeros(N)
            upper[cols] = 1.0
            upper[zcol + b] = -(1.0 - hp.gamma) * size
            rows_ub += [lower, upper]
        # superpixel coupling: c_j y_j <= sum of z over boxes containing j
        containing = [[] for _ in range(im.n)]
        for b, box in enumerate(im.boxes):
            for j in box.members:
                containing[j].append(b)
        for j, boxes in enumerate(containing):
            if not boxes:
                ub[sp_off[i] + j] = 0.0  # orphan: background
                continue
            row = np.zeros(N)
            row[sp_off[i] + j] = len(boxes)
            row[zcol + np.asarray(boxes)] = -1.0
            rows_ub.append(row)
        # exactly one foreground box
        row = np.zeros(N)
        row[zcol:zcol + im.m] = 1.0
        rows_eq.append(row)

    A_ub = np.array(rows_ub).reshape(-1, N)
    A_eq = np.array(rows_eq).reshape(-1, N)
    return JointQp(
        M=M, c=c,
        A_ub=A_ub, b_ub=np.zeros(A_ub.shape[0]),
        A_eq=A_eq, b_eq=np.ones(A_eq.shape[0]),
        lb=np.zeros(N), ub=ub,
        var_names=tuple(names), n_y=n,
        sp_offsets=sp_off, box_offsets=box_off,
    )


def objective_value(qp: JointQp, u) -> float:
    u = np.asarray(u, dtype=float)
    if u.shape != (qp.dim,):
        raise ValueError(f"u has shape {u.shape}, expected ({qp.dim},)")
    return float(u @ qp.M @ u + qp.c @ u)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def format_row(coeffs, names, sense: str, rhs: float) -> str:
    terms = []
    for k in np.flatnonzero(coeffs):
        coef = coeffs[k]
        if not terms:
            terms.append(f"{_fmt(coef)}*{names[k]}")
        else:
            sign = "-" if coef < 0 else "+"
            terms.append(f"{sign} {_fmt(abs(coef))}*{names[k]}")
    lhs = " ".join(terms) if terms else "0"
    return f"{lhs} {sense} {_fmt(rhs)}"


def dump_constraints(qp: JointQp) -> str:
    """Text listing of the constraint system, one row per line.

    Inequalities first (assembly order), then equalities, then variables
    fixed by their bounds.
    """
    lines = [format_row(r, qp.var_names, "<=", b) for r, b in zip(qp.A_ub, qp.b_ub)]
    lines += [format_row(r, qp.var_names, "=", b) for r, b in zip(qp.A_eq, qp.b_eq)]
    for k in np.flatnonzero(qp.ub <= qp.lb):
        lines.append(f"1*{qp.var_names[k]} = {_fmt(qp.lb[k])}")
    return "\n".join(lines) + "\n"


@dataclass
class Labeling:
    """Per-image decisions. ``None`` marks a decision the mode does not make."""

    chosen_box: list[Optional[int]]
    labels: list[Optional[np.ndarray]]
    relaxed_y: list[Optional[np.ndarray]] = field(default_factory=list)
    relaxed_z: list[Optional[np.ndarray]] = field(default_factory=list)

    def foreground(self) -> np.ndarray:
        return np.concatenate([np.asarray(l, dtype=int) for l in self.labels])


def round_boxes(z_parts) -> list[int]:
    # np.argmax returns the first maximum, i.e. the lowest box id on ties
    return [int(np.argmax(z)) for z in z_parts]


def round_superpixels(y_parts, instances: InstanceSet, force_orphans: bool = True) -> list[np.ndarray]:
    """Divide each image's y by its maximum and threshold at 0.5 (>= is foreground).

    With ``force_orphans`` superpixels outside every box stay background.
    """
    out = []
    for y, im in zip(y_parts, instances.images):
        y = np.asarray(y, dtype=float)
        top = y.max() if y.size else 0.0
        labels = (y / top >= 0.5) if top > 0 else np.zeros(y.shape, dtype=bool)
        if force_orphans:
            labels &= im.box_counts() > 0
        out.append(labels.astype(int))
    return out


def split_y(instances: InstanceSet, y) -> list[np.ndarray]:
    off = instances.superpixel_offsets()
    return [np.asarray(y[off[i]:off[i + 1]], dtype=float) for i in range(len(instances.images))]


def split_z(instances: InstanceSet, z) -> list[np.ndarray]:
    off = instances.box_offsets()
    return [np.asarray(z[off[i]:off[i + 1]], dtype=float) for i in range(len(instances.images))]


def round_solution(u, instances: InstanceSet) -> Labeling:
    """Round a relaxed joint optimum to one box per image and binary superpixel labels."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("relaxed solution has non-finite entries")
    n = instances.n_total
    ys = split_y(instances, u[:n])
    zs = split_z(instances, u[n:])
    return Labeling(
        chosen_box=round_boxes(zs),
        labels=round_superpixels(ys, instances),
        relaxed_y=ys,
        relaxed_z=zs,
    )
