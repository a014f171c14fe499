"""Synthetic phantoms: antialiased disks, random ellipse scenes, dataset splits.

Coordinates are measured in pixel units from the image center, x to the
right and y upward; pixel (row, col) sits at ``x = col - (n-1)/2``,
``y = (n-1)/2 - row``.  All rasterization supersamples 2x and box-averages
down so boundaries are not aliased staircases.  Every generator is
deterministic given its RNG or seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensorio

SUPERSAMPLE = 2


@dataclass(frozen=True)
class EllipseSpec:
    """One ellipse: geometry in pixel units plus a linear intensity ramp.

    The rendered value at point p inside the ellipse is
    ``max(intensity + gradient . (p - center), 0)``; generators bound the
    gradient so values stay inside the configured intensity range.
    """

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float
    intensity: float
    gradient: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be positive")

    def contains(self, x: float, y: float) -> bool:
        """Analytic membership test for a point in pixel coordinates."""
        px, py = x - self.center[0], y - self.center[1]
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        u = c * px + s * py
        v = -s * px + c * py
        a, b = self.semi_axes
        return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _centered_grid(n: int, supersample: int) -> tuple[np.ndarray, np.ndarray]:
    """Sub-pixel center coordinates (x, y) in units of the n-grid's pixels."""
    m = n * supersample
    idx = (np.arange(m) - (m - 1) / 2.0) / supersample
    x = idx[np.newaxis, :]
    y = -idx[:, np.newaxis]
    return x, y


def _box_average(img: np.ndarray, factor: int) -> np.ndarray:
    m = img.shape[0]
    n = m // factor
    return img.reshape(n, factor, n, factor).mean(axis=(1, 3))


def make_circle(n: int, radius_frac: float, value: float = 1.0) -> np.ndarray:
    """Centered disk of radius ``radius_frac * n`` pixels and constant value."""
    if not 0.0 < radius_frac < 0.5:
        raise ValueError(f"radius_frac must lie in (0, 0.5), got {radius_frac}")
    x, y = _centered_grid(n, SUPERSAMPLE)
    r = radius_frac * n
    hi = np.where(x * x + y * y <= r * r, float(value), 0.0)
    return _box_average(hi, SUPERSAMPLE)


def render_ellipses(
    specs: list[EllipseSpec] | tuple[EllipseSpec, ...],
    n: int,
    frame_n: int | None = None,
) -> np.ndarray:
    """Rasterize ellipse specs on an n x n grid.

    ``frame_n`` names the grid the specs were drawn for; rendering on a
    different ``n`` rescales coordinates accordingly, which lets measurement
    simulation rasterize the same scene at a finer resolution instead of
    replicating pixels.
    """
    if frame_n is None:
        frame_n = n
    scale = n / frame_n
    x, y = _centered_grid(n, SUPERSAMPLE)
    hi = np.zeros_like(x + y)
    for e in specs:
        cx, cy = e.center[0] * scale, e.center[1] * scale
        a, b = e.semi_axes[0] * scale, e.semi_axes[1] * scale
        c, s = np.cos(e.rotation), np.sin(e.rotation)
        px, py = x - cx, y - cy
        u = c * px + s * py
        v = -s * px + c * py
        inside = (u / a) ** 2 + (v / b) ** 2 <= 1.0
        ramp = e.intensity + (e.gradient[0] * px + e.gradient[1] * py) / scale
        field = np.where(inside, np.maximum(ramp, 0.0), 0.0)
        np.maximum(hi, field, out=hi)
    return _box_average(hi, SUPERSAMPLE)


def make_random_ellipses(
    n: int,
    rng: np.random.Generator,
    count_range: tuple[int, int] = (3, 10),
    intensity_range: tuple[float, float] = (0.2, 1.0),
) -> tuple[np.ndarray, list[EllipseSpec]]:
    """Random overlapping ellipses composed by maximum.

    Between ``count_range`` ellipses (inclusive) are placed fully inside the
    image, base intensities drawn uniformly from ``intensity_range`` with a
    random linear gradient of slope at most 0.5/n per pixel; the gradient is
    damped where needed so every ellipse's values stay inside
    ``[0, intensity_range[1]]``.
    """
    lo, hi = count_range
    if not 1 <= lo <= hi <= 20:
        raise ValueError(f"count_range must lie within [1, 20], got {count_range}")
    count = int(rng.integers(lo, hi + 1))
    specs: list[EllipseSpec] = []
    for _ in range(count):
        a = rng.uniform(0.06, 0.24) * n
        b = rng.uniform(0.06, 0.24) * n
        reach = max(a, b)
        limit = 0.48 * n - reach
        if limit <= 0:
            cx = cy = 0.0
        else:
            cx = rng.uniform(-limit, limit)
            cy = rng.uniform(-limit, limit)
        rot = rng.uniform(0.0, np.pi)
        base = rng.uniform(*intensity_range)
        slope = rng.uniform(0.0, 0.5 / n)
        direction = rng.uniform(0.0, 2.0 * np.pi)
        headroom = min(intensity_range[1] - base, base)
        if slope * reach > headroom:
            slope = headroom / reach
        grad = (slope * np.cos(direction), slope * np.sin(direction))
        specs.append(
            EllipseSpec(
                center=(cx, cy),
                semi_axes=(a, b),
                rotation=rot,
                intensity=base,
                gradient=grad,
            )
        )
    return render_ellipses(specs, n), specs


@dataclass
class DatasetItem:
    """One generated phantom with its reproducibility metadata."""

    name: str
    image: np.ndarray
    specs: list[EllipseSpec]
    seed: int
    split: str


@dataclass
class DatasetConfig:
    n: int = 128
    train: int = 1600
    validation: int = 200
    test: int = 200
    seed: int = 0
    count_range: tuple[int, int] = (3, 10)
    intensity_range: tuple[float, float] = (0.2, 1.0)


@dataclass
class DatasetSplit:
    train: list[DatasetItem] = field(default_factory=list)
    validation: list[DatasetItem] = field(default_factory=list)
    test: list[DatasetItem] = field(default_factory=list)
    seed: int = 0

    def items(self) -> list[DatasetItem]:
        return [*self.train, *self.validation, *self.test]


def make_dataset(config: DatasetConfig) -> DatasetSplit:
    """Deterministic train/validation/test phantom sets from one seed."""
    total = config.train + config.validation + config.test
    seeds = np.random.SeedSequence(config.seed).generate_state(total, np.uint64)
    split = DatasetSplit(seed=config.seed)
    buckets = (
        ("train", config.train, split.train),
        ("validation", config.validation, split.validation),
        ("test", config.test, split.test),
    )
    pos = 0
    for split_name, size, bucket in buckets:
        for i in range(size):
            item_seed = int(seeds[pos])
            pos += 1
            rng = np.random.default_rng(item_seed)
            image, specs = make_random_ellipses(
                config.n, rng, config.count_range, config.intensity_range
            )
            bucket.append(
                DatasetItem(
                    name=f"{split_name}_{i:04d}",
                    image=image,
                    specs=specs,
                    seed=item_seed,
                    split=split_name,
                )
            )
    return split


def save_dataset(split: DatasetSplit, outdir: str | Path) -> Path:
    """Write truth images as tensor files plus a line-oriented manifest.

    Each manifest line is ``path<TAB>seed<TAB>split``; paths are relative to
    the manifest's directory.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = []
    for item in split.items():
        fname = f"{item.name}.lti"
        tensorio.write_image(item.image, outdir / fname)
        lines.append(f"{fname}\t{item.seed}\t{item.split}")
    manifest = outdir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def load_manifest(path: str | Path) -> list[tuple[Path, int, str]]:
    """Parse a manifest back into (absolute path, seed, split) entries."""
    path = Path(path)
    entries = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fname, seed, split_name = line.split("\t")
        entries.append((path.parent / fname, int(seed), split_name))
    return entries
