"""Map and fixation containers plus the normalisation transforms every metric
shares.

Maps are plain 2-D ``float64`` numpy arrays indexed ``[y, x]``. Fixation
points are ``(x, y)`` integer pixel coordinates, 0-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

# Gaussian kernels are cut at this many standard deviations; the truncated
# tail mass is below 1e-4.
KERNEL_TRUNCATE = 4.0


def as_grid(values, name: str = "map") -> np.ndarray:
    """Coerce ``values`` to a finite 2-D float64 array (a copy is not forced)."""
    g = np.asarray(values, dtype=np.float64)
    if g.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {g.shape}")
    if g.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(g)):
        raise ValueError(f"{name} contains non-finite values")
    return g


@dataclass(frozen=True)
class ViewingGeometry:
    pixels_per_degree: float = 35.0

    def __post_init__(self):
        if not self.pixels_per_degree > 0:
            raise ValueError("pixels_per_degree must be positive")


@dataclass(frozen=True)
class FixationSet:
    """Fixations recorded on one image, grouped by observer.

    ``observers`` holds one ``(k, 2)`` integer array of ``(x, y)`` points per
    observer. ``width``/``height`` are the stimulus dimensions; they are only
    needed when fixations are transferred to a map of different size.
    """

    image_id: str
    observers: tuple = ()
    width: int | None = None
    height: int | None = None
    observer_ids: tuple = field(default=())

    def __post_init__(self):
        obs = tuple(_as_points(o) for o in self.observers)
        object.__setattr__(self, "observers", obs)
        if not self.observer_ids:
            object.__setattr__(self, "observer_ids", tuple(str(i) for i in range(len(obs))))
        elif len(self.observer_ids) != len(obs):
            raise ValueError("observer_ids and observers differ in length")
        if self.width is not None and self.height is not None:
            for pts in obs:
                _check_bounds(pts, self.width, self.height)

    @property
    def n_observers(self) -> int:
        return len(self.observers)

    @property
    def n_points(self) -> int:
        return sum(len(o) for o in self.observers)

    def points(self, observers: Iterable[int] | None = None) -> np.ndarray:
        idx = range(self.n_observers) if observers is None else observers
        chunks = [self.observers[i] for i in idx]
        if not chunks:
            return np.empty((0, 2), dtype=np.int64)
        return np.concatenate(chunks, axis=0)

    def subset(self, observers: Sequence[int]) -> "FixationSet":
        return FixationSet(
            self.image_id,
            tuple(self.observers[i] for i in observers),
            self.width,
            self.height,
            tuple(self.observer_ids[i] for i in observers),
        )

    def scaled_points(self, width: int, height: int, observers=None) -> np.ndarray:
        """Points mapped onto a ``width`` x ``height`` grid (pixel-centre scaling)."""
        pts = self.points(observers)
        if self.width is None or self.height is None or (
            self.width == width and self.height == height
        ):
            return pts
        x = np.floor((pts[:, 0] + 0.5) * width / self.width).astype(np.int64)
        y = np.floor((pts[:, 1] + 0.5) * height / self.height).astype(np.int64)
        return np.stack([np.clip(x, 0, width - 1), np.clip(y, 0, height - 1)], axis=1)


def _as_points(pts) -> np.ndarray:
    a = np.asarray(pts, dtype=np.int64)
    if a.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"fixation points must have shape (k, 2), got {a.shape}")
    return a


def _check_bounds(pts: np.ndarray, width: int, height: int) -> None:
    if len(pts) == 0:
        return
    bad = (pts[:, 0] < 0) | (pts[:, 0] >= width) | (pts[:, 1] < 0) | (pts[:, 1] >= height)
    if np.any(bad):
        x, y = pts[np.argmax(bad)]
        raise ValueError(f"fixation ({x}, {y}) outside {width}x{height} image")


@dataclass(frozen=True)
class BinaryFixationMap:
    """0/1 map of fixated pixels. Several fixations on one pixel count once."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 2:
            raise ValueError("fixation mask must be 2-D")
        if m.dtype != bool:
            if not np.all((m == 0) | (m == 1)):
                raise ValueError("binary fixation map must contain only 0 and 1")
            m = m.astype(bool)
        object.__setattr__(self, "mask", m)

    @property
    def n_fixations(self) -> int:
        return int(self.mask.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def values(self) -> np.ndarray:
        return self.mask.astype(np.float64)

    @classmethod
    def coerce(cls, q) -> "BinaryFixationMap":
        return q if isinstance(q, cls) else cls(np.asarray(q))


def rasterize_points(points, width: int, height: int) -> BinaryFixationMap:
    pts = _as_points(points)
    if len(pts) == 0:
        raise ValueError("no ground truth fixations")
    _check_bounds(pts, width, height)
    mask = np.zeros((height, width), dtype=bool)
    mask[pts[:, 1], pts[:, 0]] = True
    return BinaryFixationMap(mask)


def rasterize_fixations(fixations: FixationSet, width: int, height: int) -> BinaryFixationMap:
    """Binary map of every pixel holding at least one fixation."""
    return rasterize_points(fixations.points(), width, height)


def blur_to_fixation_map(binary: BinaryFixationMap, geom: ViewingGeometry) -> np.ndarray:
    """Blur fixated pixels with a one-degree Gaussian and normalise to unit mass.

    The kernel is truncated at the image border (zero padding) and the map is
    renormalised afterwards, so border fixations lose no mass overall.
    """
    binary = BinaryFixationMap.coerce(binary)
    if binary.n_fixations < 1:
        raise ValueError("no ground truth fixations")
    blurred = ndimage.gaussian_filter(
        binary.values,
        sigma=geom.pixels_per_degree,
        mode="constant",
        cval=0.0,
        truncate=KERNEL_TRUNCATE,
    )
    return normalize_sum(np.clip(blurred, 0.0, None))


def gaussian_blob(width: int, height: int, cx: float, cy: float, sx: float, sy: float) -> np.ndarray:
    """Unnormalised axis-aligned Gaussian evaluated at pixel centres."""
    x = np.arange(width, dtype=np.float64)
    y = np.arange(height, dtype=np.float64)
    gx = np.exp(-0.5 * ((x - cx) / sx) ** 2)
    gy = np.exp(-0.5 * ((y - cy) / sy) ** 2)
    return np.outer(gy, gx)


def normalize_range(g) -> np.ndarray:
    g = as_grid(g)
    lo, hi = g.min(), g.max()
    if not hi > lo:
        raise ValueError("degenerate range")
    return (g - lo) / (hi - lo)


def normalize_variance(g) -> np.ndarray:
    """Zero mean, unit population standard deviation."""
    g = as_grid(g)
    mu = g.mean()
    sd = g.std()
    if not sd > 0:
        raise ValueError("zero variance")
    return (g - mu) / sd


def normalize_sum(g) -> np.ndarray:
    g = as_grid(g)
    s = g.sum()
    if not s > 0:
        raise ValueError("zero mass")
    return g / s


def histogram_match(g, target) -> np.ndarray:
    """Give ``g`` the sorted values of ``target`` while keeping ``g``'s rank order.

    Ties in ``g`` are resolved by position (stable sort).
    """
    g = as_grid(g)
    t = np.asarray(target, dtype=np.float64).ravel()
    if t.size != g.size:
        raise ValueError(f"value counts differ: {g.size} vs {t.size}")
    out = np.empty(g.size, dtype=np.float64)
    out[np.argsort(g.ravel(), kind="stable")] = np.sort(t)
    return out.reshape(g.shape)


def _resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    # Shrinking averages over pixel footprints (exact mean pooling at integer
    # factors); enlarging interpolates linearly between pixel centres.
    if n_out == n_in:
        return np.eye(n_in)
    if n_out < n_in:
        scale = n_in / n_out
        lo = np.arange(n_out)[:, None] * scale
        hi = lo + scale
        src = np.arange(n_in)[None, :]
        overlap = np.clip(np.minimum(hi, src + 1) - np.maximum(lo, src), 0.0, None)
        return overlap / scale
    x = (np.arange(n_out) + 0.5) * n_in / n_out - 0.5
    x = np.clip(x, 0.0, n_in - 1)
    left = np.floor(x).astype(np.int64)
    right = np.minimum(left + 1, n_in - 1)
    w = x - left
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    np.add.at(m, (rows, left), 1.0 - w)
    np.add.at(m, (rows, right), w)
    return m


def resize(g, new_w: int, new_h: int) -> np.ndarray:
    """Separable linear resampling to ``new_h`` x ``new_w``."""
    g = as_grid(g)
    if new_w < 1 or new_h < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = g.shape
    if (h, w) == (new_h, new_w):
        return g.copy()
    return _resample_matrix(h, new_h) @ g @ _resample_matrix(w, new_w).T
