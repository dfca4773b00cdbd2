import itertools

import numpy as np
import pytest

from jointcoseg.baselines import run
from jointcoseg.instance import BoundingBox, Hyperparams, ImageInstance, InstanceSet, Superpixel
from jointcoseg.oracle import (InstanceTooLarge, box_copies, brute_force, energy, enumeration_size,
                              explicit_feasible)
from jointcoseg.qp import ProblemMatrices, assemble, objective_value
from jointcoseg.solver import InfeasibleError, SolverConfig, solve

from conftest import one_box_image, random_instance, random_matrices, zero_matrices


class TestThreeSuperpixelBox:
    """One box holding all three superpixels, costs (0, 1, 0), gamma .1, nu 1."""

    def setup_method(self):
        self.inst = one_box_image(3, (0, 1, 2))
        self.mats = zero_matrices(3, 1, s_s=[0.0, 1.0, 0.0])
        self.hp = Hyperparams(nu=1.0, gamma=0.1)

    def test_optimum_and_tie_break(self):
        lab, value = brute_force(self.inst, self.mats, self.hp)
        assert value == 0.0
        assert lab.chosen_box == [0]
        # y = (0,0,1), (1,0,0) and (1,0,1) all cost 0; the smallest u = [y; z] wins
        assert lab.labels[0].tolist() == [0, 0, 1]

    def test_enumeration_by_hand(self):
        im = self.inst.images[0]
        costs = {}
        for y in itertools.product((0, 1), repeat=3):
            if explicit_feasible(im, 0.1, y, [1]):
                costs[y] = energy(self.mats, self.hp, y, [1])
        assert (0, 0, 0) not in costs and (1, 1, 1) not in costs  # 0 < .3 and 3 > 2.7
        assert costs[(1, 1, 0)] == 1.0
        assert sorted(y for y, c in costs.items() if c == 0) == [(0, 0, 1), (1, 0, 0), (1, 0, 1)]


def test_infeasible_single_member_box():
    inst = one_box_image(1, (0,))
    with pytest.raises(InfeasibleError):
        brute_force(inst, zero_matrices(1, 1), Hyperparams(gamma=0.4))


def test_size_guard():
    sps = tuple(Superpixel(j, (0.0,), (0.5, 0.5), (0.5, 0.5, 0.5), 0.5, 10) for j in range(12))
    boxes = tuple(BoundingBox(b, tuple(range(12)), (0.0, 0.0, 1.0, 1.0), (0.0,), 0.5) for b in range(3))
    inst = InstanceSet((ImageInstance(sps, boxes, 10.0, 10.0),) * 2)
    assert enumeration_size(inst) == (3 * 2 ** 12) ** 2
    with pytest.raises(InstanceTooLarge):
        brute_force(inst, zero_matrices(24, 6), Hyperparams())


class TestExplicitTranscription:
    def test_wrong_copy_rejected(self, appendix):
        im = appendix.images[0]
        y = np.array([0, 0, 1, 0, 0])
        assert explicit_feasible(im, 0.1, y, [1, 0])
        x = box_copies(im, y)
        x[0] = np.array([0, 0, 0])
        assert not explicit_feasible(im, 0.1, y, [1, 0], x=x)

    def test_two_boxes_selected_rejected(self, appendix):
        assert not explicit_feasible(appendix.images[0], 0.0, [0, 0, 0, 0, 0], [1, 1])

    def test_orphan_foreground_rejected(self, appendix):
        assert not explicit_feasible(appendix.images[0], 0.1, [0, 0, 1, 0, 1], [1, 0])


def test_relaxation_lower_bounds_appendix(appendix):
    for seed in range(20):
        rng = np.random.default_rng(seed)
        mats = random_matrices(rng, appendix)
        hp = Hyperparams()
        sol = solve(assemble(appendix, mats, hp))
        _, exact = brute_force(appendix, mats, hp)
        assert sol.converged
        assert sol.objective <= exact + 1e-6


def test_brute_force_energy_matches_assembled_objective():
    rng = np.random.default_rng(5)
    for _ in range(30):
        inst = random_instance(rng, orphans=False)
        mats = random_matrices(rng, inst)
        hp = Hyperparams(gamma=0.0)
        lab, value = brute_force(inst, mats, hp)
        z = np.concatenate([np.eye(im.m)[k] for im, k in zip(inst.images, lab.chosen_box)])
        u = np.concatenate([lab.foreground(), z])
        assert objective_value(assemble(inst, mats, hp), u) == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_joint_matches_brute_force_when_relaxation_is_integral(appendix):
    # strongly rewarded y2 with box 0: the relaxed optimum is the integer point
    mats = zero_matrices(5, 2, s_s=[1.0, 1.0, -1.0, 1.0, 0.0], s_b=[0.0, 1.0])
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        noisy = ProblemMatrices(0.01 * np.diag(rng.uniform(size=5)), np.zeros((5, 5)),
                                0.01 * np.diag(rng.uniform(size=2)), mats.s_s, mats.s_b)
        hp = Hyperparams(nu=1.0, mu=1.0)
        sol = solve(assemble(appendix, noisy, hp), SolverConfig(tol_primal=1e-9, tol_dual=1e-9))
        if np.abs(sol.u - np.round(sol.u)).max() > 1e-6:
            continue
        hits += 1
        joint, _ = run("joint", appendix, hp, mats=noisy)
        exact, _ = brute_force(appendix, noisy, hp)
        assert joint.chosen_box == exact.chosen_box
        assert [l.tolist() for l in joint.labels] == [l.tolist() for l in exact.labels]
    assert hits > 0
