"""Domain types, instance file I/O and validation.

An instance file is a JSON document::

    {"version": 1,
     "images": [{"width": W, "height": H,
                 "superpixels": [{"id", "features", "position", "color",
                                  "saliency", "pixel_count", "gt_foreground"?}],
                 "boxes": [{"id", "members", "rect", "features", "saliency"}],
                 "gt_box": [x, y, w, h]?}]}

Ids are 0-based and contiguous within an image. ``saliency`` is the raw
saliency-map value in [0, 1]; it is turned into a cost only at assembly time.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Raised for malformed or invalid instance files."""


@dataclass(frozen=True)
class Superpixel:
    id: int
    features: tuple[float, ...]
    position: tuple[float, float]
    color: tuple[float, ...]
    saliency_m: float
    pixel_count: int
    gt_foreground: Optional[bool] = None


@dataclass(frozen=True)
class BoundingBox:
    id: int
    members: tuple[int, ...]
    rect: tuple[float, float, float, float]
    features: tuple[float, ...]
    saliency_m: float


@dataclass(frozen=True)
class ImageInstance:
    superpixels: tuple[Superpixel, ...]
    boxes: tuple[BoundingBox, ...]
    width: float
    height: float
    gt_box: Optional[tuple[float, float, float, float]] = None

    @property
    def n(self) -> int:
        return len(self.superpixels)

    @property
    def m(self) -> int:
        return len(self.boxes)

    def box_counts(self) -> np.ndarray:
        """Number of boxes containing each superpixel."""
        counts = np.zeros(self.n, dtype=int)
        for box in self.boxes:
            for j in box.members:
                counts[j] += 1
        return counts


@dataclass(frozen=True)
class InstanceSet:
    images: tuple[ImageInstance, ...]

    @property
    def n_total(self) -> int:
        return sum(im.n for im in self.images)

    @property
    def m_total(self) -> int:
        return sum(im.m for im in self.images)

    def superpixel_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([im.n for im in self.images])]).astype(int)

    def box_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([im.m for im in self.images])]).astype(int)

    def superpixel_features(self) -> np.ndarray:
        return np.array([sp.features for im in self.images for sp in im.superpixels], dtype=float)

    def box_features(self) -> np.ndarray:
        return np.array([b.features for im in self.images for b in im.boxes], dtype=float)

    def superpixel_saliency(self) -> np.ndarray:
        return np.array([sp.saliency_m for im in self.images for sp in im.superpixels], dtype=float)

    def box_saliency(self) -> np.ndarray:
        return np.array([b.saliency_m for im in self.images for b in im.boxes], dtype=float)

    def has_superpixel_gt(self) -> bool:
        return all(sp.gt_foreground is not None for im in self.images for sp in im.superpixels)

    def has_box_gt(self) -> bool:
        return all(im.gt_box is not None for im in self.images)


@dataclass(frozen=True)
class Hyperparams:
    """Weights and regularizers of the joint objective and the baselines.

    Defaults: gamma, mu, nu, lambda_p and lambda_c follow the published
    settings; alpha uses the uniform-color setting (0.001 is the other
    published choice). beta_s/beta_b are not published and default to 1.
    """

    alpha: float = 0.1
    nu: float = 0.005
    mu: float = 0.001
    gamma: float = 0.1
    beta_s: float = 1.0
    beta_b: float = 1.0
    lambda_p: float = 0.001
    lambda_c: float = 0.05
    saliency_eps: float = 1e-6
    baseline_fraction: float = 0.4
    fg_bounds: tuple[float, float] = (0.1, 0.9)

    def violations(self) -> list[str]:
        out = []
        if not 0.0 <= self.gamma <= 1.0:
            out.append(f"gamma outside [0,1]: {self.gamma}")
        for name in ("beta_s", "beta_b"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        for name in ("alpha", "nu", "mu", "lambda_p", "lambda_c"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0")
        if not 0.0 < self.saliency_eps < 1.0:
            out.append("saliency_eps must lie in (0,1)")
        if not 0.0 <= self.baseline_fraction <= 1.0:
            out.append("baseline_fraction outside [0,1]")
        lo, hi = self.fg_bounds
        if not 0.0 <= lo < hi <= 1.0:
            out.append(f"fg_bounds must satisfy 0 <= lo < hi <= 1: {self.fg_bounds}")
        return out


def saliency_to_cost(m, eps: float = 1e-6):
    """Saliency cost ``-log(clamp(m, eps, 1))``; lower cost means more salient.

    Accepts scalars or arrays.
    """
    clamped = np.clip(np.asarray(m, dtype=float), eps, 1.0)
    cost = -np.log(clamped)
    cost = np.maximum(cost, 0.0)  # -log(1) may come out as -0.0
    return float(cost) if cost.ndim == 0 else cost


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations


def _finite(values: Sequence[float]) -> bool:
    return all(math.isfinite(v) for v in values)


def validate(instances: InstanceSet, hp: Optional[Hyperparams] = None) -> ValidationReport:
    """Collect every invariant violation of ``instances`` (and ``hp`` if given)."""
    v: list[str] = []
    if not instances.images:
        v.append("no images")
    d_s = d_b = None
    for i, im in enumerate(instances.images):
        where = f"image {i}"
        if im.n < 1:
            v.append(f"{where}: needs at least one superpixel")
        if im.m < 1:
            v.append(f"{where}: needs at least one box")
        if not (im.width > 0 and im.height > 0):
            v.append(f"{where}: width and height must be positive")
        for a, sp in enumerate(im.superpixels):
            w = f"{where}, superpixel {a}"
            if sp.id != a:
                v.append(f"{w}: id {sp.id} breaks contiguous 0-based numbering")
            if d_s is None:
                d_s = len(sp.features)
            elif len(sp.features) != d_s:
                v.append(f"{w}: features have {len(sp.features)} dims, expected {d_s}")
            if not _finite(sp.features):
                v.append(f"{w}: non-finite feature")
            if len(sp.position) != 2:
                v.append(f"{w}: position must be 2-dim")
            elif not all(0.0 <= p <= 1.0 for p in sp.position):
                v.append(f"{w}: position outside [0,1]")
            if len(sp.color) != 3:
                v.append(f"{w}: color must be 3-dim")
            elif not all(0.0 <= c <= 1.0 for c in sp.color):
                v.append(f"{w}: color outside [0,1]")
            if not 0.0 <= sp.saliency_m <= 1.0:
                v.append(f"{w}: saliency {sp.saliency_m} outside [0,1]")
            if sp.pixel_count < 1:
                v.append(f"{w}: pixel_count must be >= 1")
        for b, box in enumerate(im.boxes):
            w = f"{where}, box {b}"
            if box.id != b:
                v.append(f"{w}: id {box.id} breaks contiguous 0-based numbering")
            if not box.members:
                v.append(f"{w}: members empty")
            bad = [j for j in box.members if not 0 <= j < im.n]
            if bad:
                v.append(f"{w}: member id {bad[0]} out of range for {im.n} superpixels")
            if len(set(box.members)) != len(box.members):
                v.append(f"{w}: duplicate member ids")
            if d_b is None:
                d_b = len(box.features)
            elif len(box.features) != d_b:
                v.append(f"{w}: features have {len(box.features)} dims, expected {d_b}")
            if not _finite(box.features):
                v.append(f"{w}: non-finite feature")
            if not 0.0 <= box.saliency_m <= 1.0:
                v.append(f"{w}: saliency {box.saliency_m} outside [0,1]")
            if len(box.rect) != 4 or box.rect[2] < 0 or box.rect[3] < 0:
                v.append(f"{w}: rect must be [x, y, w, h] with w, h >= 0")
        if im.gt_box is not None and (len(im.gt_box) != 4 or im.gt_box[2] < 0 or im.gt_box[3] < 0):
            v.append(f"{where}: gt_box must be [x, y, w, h] with w, h >= 0")
    if instances.images and instances.n_total < 2:
        v.append("need at least 2 superpixels in total")
    if hp is not None:
        v.extend(hp.violations())
    return ValidationReport(v)


# -- serialization -----------------------------------------------------------

def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise InstanceError(f"{where}: expected an object")
    if key not in obj:
        raise InstanceError(f"{where}: missing field '{key}'")
    return obj[key]


def _floats(value, where: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise InstanceError(f"{where}: expected a list of numbers")
    try:
        return tuple(float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{where}: expected a list of numbers") from exc


def instance_from_dict(doc: dict) -> InstanceSet:
    if not isinstance(doc, dict):
        raise InstanceError("top level must be an object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise InstanceError(f"unsupported or missing format version: {version!r}")
    raw_images = _require(doc, "images", "document")
    if not isinstance(raw_images, list) or not raw_images:
        raise InstanceError("no images")
    images = []
    for i, im in enumerate(raw_images):
        where = f"image {i}"
        sps = []
        for a, sp in enumerate(_require(im, "superpixels", where)):
            w = f"{where}, superpixel {a}"
            gt = sp.get("gt_foreground") if isinstance(sp, dict) else None
            sps.append(Superpixel(
                id=int(_require(sp, "id", w)),
                features=_floats(_require(sp, "features", w), w + " features"),
                position=_floats(_require(sp, "position", w), w + " position"),
                color=_floats(_require(sp, "color", w), w + " color"),
                saliency_m=float(_require(sp, "saliency", w)),
                pixel_count=int(_require(sp, "pixel_count", w)),
                gt_foreground=None if gt is None else bool(gt),
            ))
        boxes = []
        for b, box in enumerate(_require(im, "boxes", where)):
            w = f"{where}, box {b}"
            members = _require(box, "members", w)
            if not isinstance(members, list):
                raise InstanceError(f"{w}: members must be a list")
            boxes.append(BoundingBox(
                id=int(_require(box, "id", w)),
                members=tuple(int(j) for j in members),
                rect=_floats(_require(box, "rect", w), w + " rect"),
                features=_floats(_require(box, "features", w), w + " features"),
                saliency_m=float(_require(box, "saliency", w)),
            ))
        gt_box = im.get("gt_box")
        images.append(ImageInstance(
            superpixels=tuple(sps),
            boxes=tuple(boxes),
            width=float(_require(im, "width", where)),
            height=float(_require(im, "height", where)),
            gt_box=None if gt_box is None else _floats(gt_box, where + " gt_box"),
        ))
    result = InstanceSet(tuple(images))
    report = validate(result)
    if not report.ok:
        raise InstanceError("; ".join(report.violations))
    return result


def parse_instance(data: bytes | str) -> InstanceSet:
    """Parse and validate an instance document."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance file: {exc}") from exc
    return instance_from_dict(doc)


def instance_to_dict(instances: InstanceSet) -> dict:
    images = []
    for im in instances.images:
        sps = []
        for sp in im.superpixels:
            entry = {
                "id": sp.id,
                "features": list(sp.features),
                "position": list(sp.position),
                "color": list(sp.color),
                "saliency": sp.saliency_m,
                "pixel_count": sp.pixel_count,
            }
            if sp.gt_foreground is not None:
                entry["gt_foreground"] = sp.gt_foreground
            sps.append(entry)
        boxes = [{
            "id": b.id,
            "members": list(b.members),
            "rect": list(b.rect),
            "features": list(b.features),
            "saliency": b.saliency_m,
        } for b in im.boxes]
        entry = {"width": im.width, "height": im.height, "superpixels": sps, "boxes": boxes}
        if im.gt_box is not None:
            entry["gt_box"] = list(im.gt_box)
        images.append(entry)
    return {"version": FORMAT_VERSION, "images": images}


def serialize_instance(instances: InstanceSet) -> str:
    return json.dumps(instance_to_dict(instances), indent=1)


def load_instance(path) -> InstanceSet:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def save_instance(instances: InstanceSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(instances))
