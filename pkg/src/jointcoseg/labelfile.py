"""Labeling output files (same versioned JSON family as instance files)."""
from __future__ import annotations

import json

import numpy as np

from .instance import FORMAT_VERSION, InstanceError
from .qp import Labeling


def _list(a):
    return None if a is None else [float(v) for v in np.asarray(a, dtype=float)]


def labeling_to_dict(labeling: Labeling, **extra) -> dict:
    images = []
    k = len(labeling.chosen_box)
    ry = labeling.relaxed_y or [None] * k
    rz = labeling.relaxed_z or [None] * k
    for box, labels, y, z in zip(labeling.chosen_box, labeling.labels, ry, rz):
        images.append({
            "chosen_box": box,
            "labels": None if labels is None else [int(v) for v in labels],
            "relaxed_y": _list(y),
            "relaxed_z": _list(z),
        })
    doc = {"version": FORMAT_VERSION, "images": images}
    doc.update(extra)
    return doc


def labeling_from_dict(doc: dict) -> Labeling:
    if not isinstance(doc, dict) or doc.get("version") != FORMAT_VERSION:
        raise InstanceError("labeling file: unsupported or missing format version")
    images = doc.get("images")
    if not isinstance(images, list):
        raise InstanceError("labeling file: missing 'images'")

    def arr(v, dtype):
        return None if v is None else np.asarray(v, dtype=dtype)

    return Labeling(
        chosen_box=[im.get("chosen_box") for im in images],
        labels=[arr(im.get("labels"), int) for im in images],
        relaxed_y=[arr(im.get("relaxed_y"), float) for im in images],
        relaxed_z=[arr(im.get("relaxed_z"), float) for im in images],
    )


def save_labeling(labeling: Labeling, path, **extra) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(labeling_to_dict(labeling, **extra), fh, indent=1)


def load_labeling(path) -> Labeling:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"malformed labeling file: {exc}") from exc
    return labeling_from_dict(doc)
