"""Reading and writing maps, fixation tables and dataset directories.

Grid formats
    ``.png``  8- or 16-bit single-channel grayscale
    ``.csv``  comma-separated rows of floats (``.txt`` also accepted)
    ``.bin``  little-endian: uint32 width, uint32 height, then float64 values row-major

Fixation formats
    CSV with header ``image_id,observer_id,x,y`` or a JSON array of objects
    with the same keys. Coordinates are 0-indexed integer pixels.

A dataset directory holds ``fixations.csv`` (or ``fixations.json``) and
``images.csv`` with header ``image_id,width,height``.
"""

from __future__ import annotations

import csv
import json
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np
from PIL import Image

from .core import FixationSet, as_grid

GRID_SUFFIXES = (".bin", ".csv", ".txt", ".png")
_HEADER = struct.Struct("<II")


class DataFormatError(ValueError):
    """Malformed input file; the message carries the path and line."""


def load_grid(path) -> np.ndarray:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        with Image.open(path) as im:
            if im.mode not in ("L", "I;16", "I;16B", "I;16L", "I"):
                raise DataFormatError(f"{path}: expected grayscale PNG, got mode {im.mode}")
            return np.asarray(im, dtype=np.float64)
    if suffix in (".csv", ".txt"):
        try:
            g = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: {exc}") from exc
        return as_grid(g, str(path))
    if suffix == ".bin":
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise DataFormatError(f"{path}: truncated header")
        w, h = _HEADER.unpack_from(raw)
        body = raw[_HEADER.size:]
        if len(body) != 8 * w * h:
            raise DataFormatError(f"{path}: expected {w}x{h} float64 values, got {len(body)} bytes")
        return as_grid(np.frombuffer(body, dtype="<f8").reshape(h, w).astype(np.float64), str(path))
    raise DataFormatError(f"{path}: unsupported map format {suffix!r}")


def save_grid(path, g, bits: int = 8) -> None:
    """Write a grid. PNG output is range-scaled to ``bits`` (8 or 16) and
    therefore lossy; CSV and BIN are exact."""
    path = Path(path)
    g = as_grid(g)
    suffix = path.suffix.lower()
    if suffix == ".png":
        top = 255 if bits == 8 else 65535
        lo, hi = g.min(), g.max()
        scaled = (g - lo) / (hi - lo) if hi > lo else np.zeros_like(g)
        q = np.round(scaled * top)
        if bits == 8:
            Image.fromarray(q.astype(np.uint8), mode="L").save(path)
        else:
            Image.fromarray(q.astype(np.uint16)).save(path)
    elif suffix in (".csv", ".txt"):
        with open(path, "w") as fh:
            for row in g:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    elif suffix == ".bin":
        h, w = g.shape
        path.write_bytes(_HEADER.pack(w, h) + g.astype("<f8").tobytes())
    else:
        raise DataFormatError(f"{path}: unsupported map format {suffix!r}")


def _parse_int(value, where: str, field: str) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise DataFormatError(f"{where}: {field} is not a number: {value!r}") from None
    if not f.is_integer():
        raise DataFormatError(f"{where}: {field} must be an integer pixel, got {value!r}")
    return int(f)


def _collect(rows, where_fmt: str, sizes=None) -> dict[str, FixationSet]:
    grouped: "OrderedDict[str, OrderedDict[str, list]]" = OrderedDict()
    for where, row in rows:
        try:
            image_id = str(row["image_id"]).strip()
            observer = str(row["observer_id"]).strip()
            x = _parse_int(row["x"], where, "x")
            y = _parse_int(row["y"], where, "y")
        except KeyError as exc:
            raise DataFormatError(f"{where}: missing column {exc.args[0]!r}") from None
        if not image_id:
            raise DataFormatError(f"{where}: empty image_id")
        if sizes is not None:
            if image_id not in sizes:
                raise DataFormatError(f"{where}: image {image_id!r} not listed in images.csv")
            w, h = sizes[image_id]
            if not (0 <= x < w and 0 <= y < h):
                raise DataFormatError(f"{where}: fixation ({x}, {y}) outside {w}x{h} image {image_id!r}")
        grouped.setdefault(image_id, OrderedDict()).setdefault(observer, []).append((x, y))
    out = {}
    for image_id, observers in grouped.items():
        w, h = sizes[image_id] if sizes is not None else (None, None)
        ids = tuple(observers)
        out[image_id] = FixationSet(image_id, tuple(observers[o] for o in ids), w, h, ids)
    return out


def load_fixations(path, sizes: dict | None = None) -> dict[str, FixationSet]:
    """Fixation sets keyed by image id. ``sizes`` maps image id to
    ``(width, height)`` and enables bounds checking."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
        if not isinstance(data, list):
            raise DataFormatError(f"{path}: expected a JSON array of fixation records")
        for k, rec in enumerate(data):
            if not isinstance(rec, dict):
                raise DataFormatError(f"{path}: record {k} is not an object")
        rows = ((f"{path}: record {k}", rec) for k, rec in enumerate(data))
        return _collect(rows, str(path), sizes)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"image_id", "observer_id", "x", "y"} - set(reader.fieldnames or ())
        if missing:
            raise DataFormatError(f"{path}:1: header lacks {', '.join(sorted(missing))}")
        rows = [(f"{path}:{reader.line_num}", row) for row in reader]
    return _collect(rows, str(path), sizes)


def load_image_sizes(path) -> dict[str, tuple[int, int]]:
    path = Path(path)
    sizes = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            where = f"{path}:{reader.line_num}"
            try:
                w = _parse_int(row["width"], where, "width")
                h = _parse_int(row["height"], where, "height")
                image_id = row["image_id"].strip()
            except KeyError as exc:
                raise DataFormatError(f"{where}: missing column {exc.args[0]!r}") from None
            if w < 1 or h < 1:
                raise DataFormatError(f"{where}: non-positive image size")
            sizes[image_id] = (w, h)
    return sizes


def load_dataset(dataset_dir) -> list[FixationSet]:
    """All images of a dataset directory, sorted by image id."""
    d = Path(dataset_dir)
    sizes = load_image_sizes(d / "images.csv")
    fix_path = d / "fixations.csv"
    if not fix_path.exists():
        fix_path = d / "fixations.json"
    fixations = load_fixations(fix_path, sizes)
    out = []
    for image_id in sorted(sizes):
        w, h = sizes[image_id]
        out.append(fixations.get(image_id, FixationSet(image_id, (), w, h)))
    return out


def write_dataset(dataset_dir, fixation_sets) -> None:
    d = Path(dataset_dir)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "images.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_id", "width", "height"])
        for fs in fixation_sets:
            w.writerow([fs.image_id, fs.width, fs.height])
    with open(d / "fixations.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["image_id", "observer_id", "x", "y"])
        for fs in fixation_sets:
            for oid, pts in zip(fs.observer_ids, fs.observers):
                for x, y in pts.tolist():
                    w.writerow([fs.image_id, oid, x, y])


def find_map(model_dir, image_id: str) -> Path | None:
    d = Path(model_dir)
    for suffix in GRID_SUFFIXES:
        p = d / f"{image_id}{suffix}"
        if p.exists():
            return p
    return None
