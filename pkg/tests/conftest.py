from pathlib import Path

import numpy as np
import pytest

from jointcoseg.instance import (BoundingBox, ImageInstance, InstanceSet, Superpixel,
                                 parse_instance)
from jointcoseg.qp import ProblemMatrices

DATA = Path(__file__).parent / "data"


@pytest.fixture
def appendix_bytes():
    return (DATA / "appendix.json").read_bytes()


@pytest.fixture
def appendix(appendix_bytes):
    return parse_instance(appendix_bytes)


def random_instance(rng, images=(1, 3), n=(2, 6), m=(1, 3), d_s=3, d_b=2, orphans=True):
    """Small random instance; box members are random subsets."""
    ims = []
    for _ in range(int(rng.integers(images[0], images[1] + 1))):
        ni = int(rng.integers(n[0], n[1] + 1))
        mi = int(rng.integers(m[0], m[1] + 1))
        sps = tuple(Superpixel(
            id=j,
            features=tuple(rng.normal(size=d_s).tolist()),
            position=tuple(rng.uniform(size=2).tolist()),
            color=tuple(rng.uniform(size=3).tolist()),
            saliency_m=float(rng.uniform()),
            pixel_count=int(rng.integers(1, 200)),
            gt_foreground=bool(rng.random() < 0.5),
        ) for j in range(ni))
        boxes = []
        for b in range(mi):
            size = int(rng.integers(1, ni + 1))
            members = tuple(sorted(rng.choice(ni, size=size, replace=False).tolist()))
            boxes.append(BoundingBox(
                id=b, members=members,
                rect=tuple(rng.uniform(0, 50, size=4).tolist()),
                features=tuple(rng.normal(size=d_b).tolist()),
                saliency_m=float(rng.uniform()),
            ))
        if not orphans:
            covered = set().union(*(bx.members for bx in boxes))
            missing = tuple(j for j in range(ni) if j not in covered)
            if missing:
                first = boxes[0]
                boxes[0] = BoundingBox(first.id, tuple(sorted(first.members + missing)),
                                       first.rect, first.features, first.saliency_m)
        ims.append(ImageInstance(sps, tuple(boxes), 100.0, 100.0,
                                 tuple(rng.uniform(0, 50, size=4).tolist())))
    inst = InstanceSet(tuple(ims))
    if inst.n_total < 2:
        return random_instance(rng, images, n, m, d_s, d_b, orphans)
    return inst


def one_box_image(n, members):
    sps = tuple(Superpixel(j, (0.0,), (0.5, 0.5), (0.5, 0.5, 0.5), 0.5, 10) for j in range(n))
    box = BoundingBox(0, tuple(members), (0.0, 0.0, 10.0, 10.0), (0.0,), 0.5)
    return InstanceSet((ImageInstance(sps, (box,), 10.0, 10.0),))


def seg_instance(pixels, gt):
    sps = tuple(Superpixel(j, (0.0,), (0.5, 0.5), (0.5, 0.5, 0.5), 0.5, p, g)
                for j, (p, g) in enumerate(zip(pixels, gt)))
    box = BoundingBox(0, tuple(range(len(pixels))), (0.0, 0.0, 10.0, 10.0), (0.0,), 0.5)
    return InstanceSet((ImageInstance(sps, (box,), 10.0, 10.0, (0.0, 0.0, 10.0, 10.0)),))


def zero_matrices(n, m, s_s=None, s_b=None):
    return ProblemMatrices(np.zeros((n, n)), np.zeros((n, n)), np.zeros((m, m)),
                           np.zeros(n) if s_s is None else np.asarray(s_s, float),
                           np.zeros(m) if s_b is None else np.asarray(s_b, float))


def random_psd(rng, k, rank=None):
    B = rng.normal(size=(rank or k, k))
    return B.T @ B / k


def random_matrices(rng, inst) -> ProblemMatrices:
    n, m = inst.n_total, inst.m_total
    return ProblemMatrices(
        D_s=random_psd(rng, n), L_s=random_psd(rng, n), D_b=random_psd(rng, m),
        s_s=rng.uniform(0, 3, n), s_b=rng.uniform(0, 3, m),
    )


def kkt_qp(rng, N=None):
    """Strictly convex QP with a known optimum, built from the optimality conditions.

    Returns (qp, u_star). Some inequality rows and some bounds are active
    with strictly positive multipliers, the rest are slack.
    """
    from jointcoseg.qp import JointQp

    N = N or int(rng.integers(3, 11))
    M = random_psd(rng, N) + 0.1 * np.eye(N)
    u = rng.uniform(0.1, 0.9, N)
    at = rng.permutation(N)[:int(rng.integers(0, N // 2 + 1))]
    u[at] = rng.integers(0, 2, at.size)
    free = N - at.size
    n_ub = int(rng.integers(1, 5))
    # keep the active set smaller than the number of free coordinates
    n_eq = min(int(rng.integers(0, 3)), max(free - 1, 0))
    A_ub = rng.normal(size=(n_ub, N))
    A_eq = rng.normal(size=(n_eq, N))
    active = rng.random(n_ub) < 0.5
    active[np.flatnonzero(active)[max(free - 1 - n_eq, 0):]] = False
    b_ub = A_ub @ u + np.where(active, 0.0, rng.uniform(0.1, 1.0, n_ub))
    b_eq = A_eq @ u
    lam = np.where(active, rng.uniform(0.5, 2.0, n_ub), 0.0)
    nu = rng.normal(size=n_eq)
    # bound multipliers: lower bound pushes up at 0, upper bound pushes down at 1
    mu = np.zeros(N)
    mu[at] = rng.uniform(0.5, 2.0, at.size) * np.where(u[at] == 1, 1.0, -1.0)
    c = -(2 * M @ u + A_ub.T @ lam + A_eq.T @ nu + mu)
    qp = JointQp(M=M, c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                 lb=np.zeros(N), ub=np.ones(N))
    return qp, u


# -- acceptance summary -------------------------------------------------------

_ACCEPTANCE = {}
_NOTES = {}


@pytest.fixture
def note(request):
    """Attach a measured-value summary to the acceptance line of this test."""
    def add(text):
        _NOTES[request.node.nodeid] = text
    return add


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        flag = "PASS" if outcome == "passed" else "FAIL"
        extra = _NOTES.get(nodeid)
        terminalreporter.write_line(f"{flag}  {name}" + (f"  [{extra}]" if extra else ""))
