import itertools

import numpy as np
import pytest

from jointcoseg.baselines import BaselineMode, most_salient_pixels, run
from jointcoseg.instance import BoundingBox, Hyperparams, ImageInstance, InstanceSet
from jointcoseg.qp import ProblemMatrices, build_matrices
from jointcoseg.synth import SynthConfig, generate

from conftest import one_box_image


def test_mode_parsing():
    assert BaselineMode.parse("sal-disc") is BaselineMode.SAL_DISC
    assert BaselineMode.parse("B3") is BaselineMode.B3
    with pytest.raises(ValueError):
        BaselineMode.parse("grabcut")


def test_sal_picks_cheapest_box(appendix):
    hp = Hyperparams()
    mats = build_matrices(appendix, hp)
    im = appendix.images[0]
    extra = BoundingBox(2, (2,), (0.0, 0.0, 1.0, 1.0), (0.0, 0.0), 0.5)
    inst = InstanceSet((ImageInstance(im.superpixels, im.boxes + (extra,), im.width, im.height, im.gt_box),))
    forced = ProblemMatrices(mats.D_s, mats.L_s, np.zeros((3, 3)), mats.s_s, np.array([0.9, 0.1, 0.5]))
    lab, rep = run("sal", inst, hp, mats=forced)
    assert lab.chosen_box == [1]
    assert lab.labels == [None]
    assert rep.pixel_ap is None and rep.corloc is not None


def test_b2_greedy_matches_enumeration():
    costs = np.array([0.1, 0.9, 0.2, 0.8, 0.5])
    pixels = np.full(5, 10)
    got = most_salient_pixels(costs, pixels, 0.4)
    assert np.flatnonzero(got).tolist() == [0, 2]
    # cheapest subset covering at least 40% of the pixels
    best = min((s for k in range(6) for s in itertools.combinations(range(5), k)
                if pixels[list(s)].sum() >= 0.4 * pixels.sum()),
               key=lambda s: costs[list(s)].sum())
    assert list(best) == [0, 2]


def test_b2_stable_on_ties():
    assert most_salient_pixels([1.0, 1.0, 1.0], [1, 1, 1], 0.5).tolist() == [1, 1, 0]


@pytest.mark.parametrize("mode", ["joint", "b1", "b2", "b3", "sal", "sal_disc"])
def test_every_mode_runs(mode):
    inst = generate(SynthConfig(seed=1))
    lab, rep = run(mode, inst)
    box_modes = {"joint", "sal", "sal_disc"}
    seg_modes = {"joint", "b1", "b2", "b3"}
    assert (rep.corloc is not None) == (mode in box_modes)
    assert (rep.pixel_ap is not None) == (mode in seg_modes)
    assert rep.objective is not None
    if rep.gap is not None:
        assert rep.gap >= -1e-6


def test_b1_respects_fraction_bounds():
    inst = generate(SynthConfig(seed=2, superpixels=10))
    hp = Hyperparams(fg_bounds=(0.2, 0.6))
    lab, _ = run("b1", inst, hp)
    for y, im in zip(lab.relaxed_y, inst.images):
        pix = np.array([sp.pixel_count for sp in im.superpixels])
        frac = y @ pix / pix.sum()
        assert 0.2 - 1e-5 <= frac <= 0.6 + 1e-5


def test_relaxation_exists_where_integers_do_not():
    # 0.4 <= y <= 0.6 has no integer point but the relaxation is fine
    inst = one_box_image(1, (0,))
    mats = ProblemMatrices(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)), np.ones(1), np.zeros(1))
    hp = Hyperparams(gamma=0.4, nu=1.0)
    lab, rep = run("joint", inst, hp, mats=mats)
    assert lab.relaxed_y[0][0] == pytest.approx(0.4, abs=1e-6)
    assert lab.chosen_box == [0] and lab.labels[0].tolist() == [1]
    assert rep.relaxed_objective == pytest.approx(0.4, abs=1e-6)
