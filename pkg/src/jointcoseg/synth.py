"""Planted synthetic instances with known foreground.

Each image gets a spatially clustered group of foreground superpixels whose
features sit ``separation`` noise-standard-deviations away from the
background features and whose saliency is tied to the foreground by
``saliency_correlation``. One box covers the planted group plus ``dilation``
nearby background superpixels; the other boxes are random member sets of
``distractor_min``..``distractor_max`` superpixels (optionally the ones
nearest a random anchor). With ``clutter`` > 0 a second salient object,
different in every image, gets a tight box of its own. Box features and
saliency are member averages plus noise.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .instance import BoundingBox, ImageInstance, InstanceSet, Superpixel


@dataclass(frozen=True)
class SynthConfig:
    images: int = 3
    superpixels: int = 8
    boxes: int = 3
    feature_dim: int = 4
    separation: float = 5.0
    saliency_correlation: float = 0.9
    tightness: float = 0.1
    fg_fraction: float = 0.4
    dilation: int = 0
    box_feature_noise: float = 0.5
    distractor_min: int = 2
    distractor_max: int = 0  # 0: n // 2
    coherent_distractors: bool = False
    clutter: int = 0
    width: int = 120
    height: int = 120
    seed: int = 0

    def __post_init__(self):
        for name in ("images", "superpixels", "boxes", "feature_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if not 0.0 <= self.saliency_correlation <= 1.0:
            raise ValueError("saliency_correlation must lie in [0,1]")
        if not 0.0 < self.fg_fraction < 1.0:
            raise ValueError("fg_fraction must lie in (0,1)")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def as_dict(self) -> dict:
        return asdict(self)


def _extent(pos, pixels, width, height):
    side = np.sqrt(pixels)
    cx, cy = pos[0] * width, pos[1] * height
    return cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2


def _cover(extents):
    x0 = min(e[0] for e in extents)
    y0 = min(e[1] for e in extents)
    x1 = max(e[2] for e in extents)
    y1 = max(e[3] for e in extents)
    return (float(x0), float(y0), float(x1 - x0), float(y1 - y0))


def _image(cfg: SynthConfig, rng: np.random.Generator, fg_mean, fg_color) -> ImageInstance:
    n = cfg.superpixels
    k = int(np.clip(round(cfg.fg_fraction * n), 1, n))
    fg = np.zeros(n, dtype=bool)
    fg[rng.choice(n, size=k, replace=False)] = True

    center = rng.uniform(0.3, 0.7, size=2)
    pos = rng.uniform(0.0, 1.0, size=(n, 2))
    pos[fg] = center + cfg.tightness * rng.normal(size=(k, 2))
    pos = np.clip(pos, 0.0, 1.0)

    # salient clutter: an image-specific object that is not shared across images
    n_clutter = min(cfg.clutter, n - k)
    clutter = np.zeros(n, dtype=bool)
    if n_clutter:
        clutter[rng.choice(np.flatnonzero(~fg), size=n_clutter, replace=False)] = True
        other = rng.uniform(0.2, 0.8, size=2)
        pos[clutter] = other + cfg.tightness * rng.normal(size=(n_clutter, 2))
        pos = np.clip(pos, 0.0, 1.0)

    feats = rng.normal(size=(n, cfg.feature_dim))
    feats[fg] += fg_mean
    if n_clutter:
        own = rng.normal(size=cfg.feature_dim)
        feats[clutter] += cfg.separation * own / np.linalg.norm(own)

    colors = rng.uniform(0.0, 1.0, size=(n, 3))
    colors[fg] = np.clip(fg_color + 0.05 * rng.normal(size=(k, 3)), 0.0, 1.0)

    rho = cfg.saliency_correlation
    tied = np.where(fg | clutter, rng.uniform(0.6, 1.0, n), rng.uniform(0.0, 0.4, n))
    sal = np.clip(rho * tied + (1 - rho) * rng.uniform(0.0, 1.0, n), 0.0, 1.0)

    pixels = rng.integers(50, 151, size=n)
    extents = [_extent(pos[j], pixels[j], cfg.width, cfg.height) for j in range(n)]

    # planted box: foreground plus the nearest background superpixels
    bg_idx = np.flatnonzero(~fg & ~clutter)
    dist = np.linalg.norm(pos[bg_idx] - center, axis=1)
    extra = bg_idx[np.argsort(dist, kind="stable")[:min(cfg.dilation, bg_idx.size)]]
    member_sets = [tuple(sorted(np.concatenate([np.flatnonzero(fg), extra]).tolist()))]
    if n_clutter and cfg.boxes > 1:
        member_sets.append(tuple(np.flatnonzero(clutter).tolist()))
    hi = cfg.distractor_max or max(1, n // 2)
    lo = min(max(1, cfg.distractor_min), hi, n)
    hi = min(hi, n)
    attempts = 0
    while len(member_sets) < cfg.boxes:
        attempts += 1
        size = int(rng.integers(lo, hi + 1))
        if cfg.coherent_distractors:
            anchor = rng.uniform(0.0, 1.0, size=2)
            near = np.argsort(np.linalg.norm(pos - anchor, axis=1), kind="stable")[:size]
            members = tuple(sorted(near.tolist()))
        else:
            members = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
        # tiny images may not have enough distinct subsets
        if members not in member_sets or attempts > 100:
            member_sets.append(members)
    order = rng.permutation(cfg.boxes)
    member_sets = [member_sets[o] for o in order]

    superpixels = tuple(Superpixel(
        id=j,
        features=tuple(float(v) for v in feats[j]),
        position=(float(pos[j, 0]), float(pos[j, 1])),
        color=tuple(float(v) for v in colors[j]),
        saliency_m=float(sal[j]),
        pixel_count=int(pixels[j]),
        gt_foreground=bool(fg[j]),
    ) for j in range(n))
    boxes = []
    for b, members in enumerate(member_sets):
        idx = np.asarray(members)
        w = pixels[idx].astype(float)
        boxes.append(BoundingBox(
            id=b,
            members=members,
            rect=_cover([extents[j] for j in members]),
            features=tuple(float(v) for v in feats[idx].mean(axis=0)
                           + cfg.box_feature_noise * rng.normal(size=cfg.feature_dim)),
            saliency_m=float(np.clip(w @ sal[idx] / w.sum(), 0.0, 1.0)),
        ))
    return ImageInstance(
        superpixels=superpixels,
        boxes=tuple(boxes),
        width=float(cfg.width),
        height=float(cfg.height),
        gt_box=_cover([extents[j] for j in np.flatnonzero(fg)]),
    )


def planted_box(image: ImageInstance) -> int:
    """Id of the box that contains every ground-truth foreground superpixel and is smallest."""
    fg = {sp.id for sp in image.superpixels if sp.gt_foreground}
    best = [b for b in image.boxes if fg <= set(b.members)]
    return min(best, key=lambda b: (len(b.members), b.id)).id


def generate(cfg: SynthConfig) -> InstanceSet:
    rng = np.random.default_rng(cfg.seed)
    direction = rng.normal(size=cfg.feature_dim)
    direction /= np.linalg.norm(direction)
    fg_mean = cfg.separation * direction
    fg_color = rng.uniform(0.2, 0.8, size=3)
    return InstanceSet(tuple(_image(cfg, rng, fg_mean, fg_color) for _ in range(cfg.images)))
