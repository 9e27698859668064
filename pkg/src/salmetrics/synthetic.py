"""Synthetic eye-tracking datasets with a controllable center bias.

Each image gets a few latent salient objects whose positions are drawn
around the image center. Observers fixate objects (and occasionally the
center) with Gaussian scatter of about one degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FixationSet, gaussian_blob, normalize_sum


@dataclass(frozen=True)
class SceneObject:
    x: float
    y: float
    size: float
    weight: float


@dataclass(frozen=True)
class SyntheticImage:
    fixations: FixationSet
    objects: tuple


def _objects(rng, width, height, ppd, n_objects):
    objs = []
    for _ in range(n_objects):
        x = np.clip(rng.normal(width / 2, width / 5), 0.1 * width, 0.9 * width)
        y = np.clip(rng.normal(height / 2, height / 5), 0.1 * height, 0.9 * height)
        objs.append(SceneObject(float(x), float(y), float(ppd * rng.uniform(0.6, 1.4)), float(rng.uniform(0.5, 1.0))))
    return tuple(objs)


def make_image(
    image_id: str,
    rng: np.random.Generator,
    width: int = 128,
    height: int = 96,
    ppd: float = 4.0,
    n_observers: int = 15,
    fixations_per_observer: tuple[int, int] = (4, 6),
    center_fraction: float = 0.15,
) -> SyntheticImage:
    objs = _objects(rng, width, height, ppd, int(rng.integers(2, 5)))
    weights = np.array([o.weight for o in objs])
    weights /= weights.sum()
    observers = []
    for _ in range(n_observers):
        k = int(rng.integers(fixations_per_observer[0], fixations_per_observer[1] + 1))
        pts = []
        for _ in range(k):
            if rng.random() < center_fraction:
                x = rng.normal(width / 2, width / 6)
                y = rng.normal(height / 2, height / 6)
            else:
                o = objs[rng.choice(len(objs), p=weights)]
                x = rng.normal(o.x, o.size)
                y = rng.normal(o.y, o.size)
            pts.append((int(np.clip(round(x), 0, width - 1)), int(np.clip(round(y), 0, height - 1))))
        observers.append(pts)
    return SyntheticImage(FixationSet(image_id, tuple(observers), width, height), objs)


def make_dataset(n_images: int = 100, seed: int = 0, **kwargs) -> list[SyntheticImage]:
    rng = np.random.default_rng(seed)
    return [make_image(f"img{i:04d}", rng, **kwargs) for i in range(n_images)]


def object_map(image: SyntheticImage, blur: float = 1.0, floor: float = 0.0) -> np.ndarray:
    """A model-style saliency map built from the latent objects.

    ``blur`` scales the object extent; ``floor`` adds a uniform pedestal
    (as a fraction of the peak) to regularise the map.
    """
    fs = image.fixations
    m = np.zeros((fs.height, fs.width))
    for o in image.objects:
        m += o.weight * gaussian_blob(fs.width, fs.height, o.x, o.y, o.size * blur, o.size * blur)
    m = m / m.max()
    return normalize_sum(m + floor)
