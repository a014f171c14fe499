"""Bandlimited cone-adapted shearlet frames on square pixel grids.

The frame is built entirely in the frequency domain.  A smooth radial
partition splits the DFT grid into a lowpass disc and ``J`` dyadic annuli;
within each annulus, smooth angular windows indexed by an integer shear
``k`` tile the horizontal cone (``|xi2| <= |xi1|``) and the vertical cone
(``|xi1| <= |xi2|``).  The outermost shears of each cone straddle the
diagonal seam; both copies are kept as distinct subbands and the whole
window stack is renormalized pointwise so that the squared windows sum to
one exactly.  The resulting operator is a Parseval frame: ``adjoint``
inverts ``forward`` and both preserve energy to rounding error.

Windows are symmetrized across the self-conjugate Nyquist rows before
normalization, so coefficients of real images are real.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Cone labels, matching the on-disk coefficient record encoding.
CONE_LOWPASS = 0
CONE_HORIZONTAL = 1
CONE_VERTICAL = -1

#: Smallest grid the radial partition supports (lowpass disc needs radius 2).
MIN_SIZE = 8


class ConfigurationError(ValueError):
    """Raised for grid sizes or level vectors the frame cannot be built on."""


@dataclass(frozen=True)
class SubbandIndex:
    """Identity of one subband: ``(scale, shear, cone)``.

    The lowpass band is ``(-1, 0, CONE_LOWPASS)``.  Directional bands have
    ``scale`` in ``0..J-1`` (coarse to fine) and ``shear`` in
    ``-2**s .. 2**s`` where ``s`` is the shear level of that scale.
    """

    scale: int
    shear: int
    cone: int

    @property
    def is_lowpass(self) -> bool:
        return self.cone == CONE_LOWPASS


def subband_list(levels: tuple[int, ...]) -> tuple[SubbandIndex, ...]:
    """Enumerate subbands in the frozen order used everywhere in this package.

    Lowpass first, then scales ascending; within a scale the horizontal cone
    with shears ascending, then the vertical cone with shears ascending.
    """
    out = [SubbandIndex(-1, 0, CONE_LOWPASS)]
    for j, s in enumerate(levels):
        for cone in (CONE_HORIZONTAL, CONE_VERTICAL):
            out.extend(SubbandIndex(j, k, cone) for k in range(-(2**s), 2**s + 1))
    return tuple(out)


def subband_count(levels: tuple[int, ...]) -> int:
    """Number of subbands: one lowpass plus ``4 * 2**s + 2`` per scale."""
    return 1 + sum(4 * 2**s + 2 for s in levels)


def ordering_hash(levels: tuple[int, ...]) -> str:
    """SHA-256 of the subband enumeration; guards against ordering drift.

    Any artifact that stores per-subband data (coefficient files, trained
    model checkpoints) embeds this hash so a reordering of the enumeration
    cannot silently scramble channels.
    """
    text = ";".join(f"{b.scale},{b.shear},{b.cone}" for b in subband_list(levels))
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def default_levels(n: int) -> tuple[int, ...]:
    """Default shear levels for an ``n x n`` grid.

    One scale per octave above a fixed base resolution, capped at shear
    level 2:  64 -> (0, 1), 128 -> (0, 1, 2), 256 -> (0, 1, 2, 2),
    512 -> (0, 0, 1, 2, 2).
    """
    if n < MIN_SIZE:
        raise ConfigurationError(f"grid size {n} is below the minimum {MIN_SIZE}")
    n_scales = max(1, int(math.log2(n)) - 4)
    if n_scales <= 4:
        return tuple(min(j, 2) for j in range(n_scales))
    return (0,) * (n_scales - 4) + (0, 1, 2, 2)


def _meyer_ramp(t: np.ndarray) -> np.ndarray:
    """Polynomial ramp 0 -> 1 on [0, 1] with two vanishing derivatives."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)


def _rise(t: np.ndarray) -> np.ndarray:
    return np.sin(0.5 * np.pi * _meyer_ramp(t))


def _fall(t: np.ndarray) -> np.ndarray:
    return np.cos(0.5 * np.pi * _meyer_ramp(t))


def _angular_window(arg: np.ndarray) -> np.ndarray:
    """Smooth bump on [-1, 1]; its squared integer translates sum to one."""
    return np.where(np.abs(arg) <= 1.0, _fall(np.abs(arg)), 0.0)


def _negate_grid(stack: np.ndarray) -> np.ndarray:
    """Apply the DFT index map ``i -> (-i) mod n`` on the last two axes."""
    flipped = stack[..., ::-1, ::-1]
    return np.roll(flipped, (1, 1), axis=(-2, -1))


@dataclass(frozen=True)
class ShearletSystem:
    """Precomputed frequency windows for one grid size and level vector."""

    n: int
    levels: tuple[int, ...]
    index: tuple[SubbandIndex, ...]
    windows: np.ndarray  # (S, n, n) float64, squares sum to 1 pointwise
    ordering_hash: str

    @property
    def n_subbands(self) -> int:
        return len(self.index)

    def scale_slices(self) -> dict[int, list[int]]:
        """Map each scale (and -1 for lowpass) to its subband positions."""
        out: dict[int, list[int]] = {}
        for pos, band in enumerate(self.index):
            out.setdefault(band.scale, []).append(pos)
        return out


def _validate(n: int, levels: tuple[int, ...]) -> None:
    if n < MIN_SIZE or n % 2:
        raise ConfigurationError(f"grid size must be even and >= {MIN_SIZE}, got {n}")
    if not levels:
        raise ConfigurationError("levels must name at least one scale")
    if any(int(s) != s or s < 0 for s in levels):
        raise ConfigurationError(f"shear levels must be nonnegative integers: {levels}")
    if len(levels) > math.log2(n) - 2 + 1e-9:
        raise ConfigurationError(
            f"{len(levels)} scales exceed the limit log2({n}) - 2; "
            "the lowpass disc would collapse"
        )


@lru_cache(maxsize=4)
def _build(n: int, levels: tuple[int, ...]) -> ShearletSystem:
    index = subband_list(levels)
    n_scales = len(levels)
    # Integer frequencies in DFT order; xi1 along columns, xi2 along rows
    # with the sign flipped so that +xi2 points up in image coordinates.
    freq = np.fft.fftfreq(n) * n
    xi1 = freq[np.newaxis, :]
    xi2 = -freq[:, np.newaxis]
    radius = np.hypot(xi1, xi2)

    # Radial partition: annulus j peaks at b[j], top annulus extends to the
    # grid corners so the squared windows sum to one beyond the Nyquist disc.
    b = [n * 2.0 ** (j - n_scales) for j in range(n_scales)]
    lowpass = np.where(
        radius <= b[0] / 2, 1.0, _fall(2.0 * radius / b[0] - 1.0)
    ) * (radius < b[0])
    radial = []
    for j in range(n_scales):
        band = np.where(
            radius <= b[j],
            _rise(2.0 * radius / b[j] - 1.0),
            1.0 if j == n_scales - 1 else _fall(radius / b[j] - 1.0),
        )
        band[radius <= b[j] / 2] = 0.0
        if j < n_scales - 1:
            band[radius >= 2 * b[j]] = 0.0
        radial.append(band)

    with np.errstate(divide="ignore", invalid="ignore"):
        slope_h = np.where(xi1 != 0, xi2 / xi1, 0.0)
        slope_v = np.where(xi2 != 0, xi1 / xi2, 0.0)
    in_h = np.abs(xi2) <= np.abs(xi1)
    in_v = np.abs(xi1) <= np.abs(xi2)

    windows = np.empty((len(index), n, n))
    windows[0] = lowpass
    pos = 1
    for j, s in enumerate(levels):
        for cone in (CONE_HORIZONTAL, CONE_VERTICAL):
            slope = slope_h if cone == CONE_HORIZONTAL else slope_v
            mask = in_h if cone == CONE_HORIZONTAL else in_v
            for k in range(-(2**s), 2**s + 1):
                angular = _angular_window(2.0**s * slope - k)
                windows[pos] = radial[j] * np.where(mask, angular, 0.0)
                pos += 1

    # Make each window invariant under grid negation (only the Nyquist
    # row/column are affected), so real images get real coefficients.
    windows = np.sqrt(0.5 * (windows**2 + _negate_grid(windows) ** 2))

    # The seam shears of the two cones overlap on the diagonals; dividing by
    # the pointwise sum of squares makes the partition of unity exact.
    total = np.einsum("sij,sij->ij", windows, windows)
    if total.min() <= 0.5:  # pragma: no cover - construction guarantees > 1
        raise ConfigurationError("frequency plane not covered; bad level vector")
    windows /= np.sqrt(total)

    return ShearletSystem(
        n=n,
        levels=levels,
        index=index,
        windows=windows,
        ordering_hash=ordering_hash(levels),
    )


def build_system(n: int, levels=None) -> ShearletSystem:
    """Build (or fetch from cache) the frame for an ``n x n`` grid.

    Parameters
    ----------
    n : int
        Grid size; must be even and at least ``MIN_SIZE``.
    levels : sequence of int, optional
        Shear level per scale, coarse to fine.  Defaults to
        ``default_levels(n)``.
    """
    if levels is None:
        levels = default_levels(n)
    levels = tuple(int(s) for s in levels)
    _validate(n, levels)
    return _build(int(n), levels)


def forward(system: ShearletSystem, image: np.ndarray) -> np.ndarray:
    """Analyze an image into subband coefficients of shape ``(n, n, S)``."""
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (system.n, system.n):
        raise ConfigurationError(
            f"image shape {image.shape} does not match system grid {system.n}"
        )
    spectrum = np.fft.fft2(image)
    coeffs = np.empty((system.n, system.n, system.n_subbands))
    for c in range(system.n_subbands):
        coeffs[:, :, c] = np.fft.ifft2(spectrum * system.windows[c]).real
    return coeffs


def adjoint(system: ShearletSystem, coeffs: np.ndarray) -> np.ndarray:
    """Synthesize an image from coefficients; exact inverse of ``forward``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    expected = (system.n, system.n, system.n_subbands)
    if coeffs.shape != expected:
        raise ConfigurationError(
            f"coefficient shape {coeffs.shape} does not match {expected}"
        )
    accum = np.zeros((system.n, system.n), dtype=complex)
    for c in range(system.n_subbands):
        accum += np.fft.fft2(coeffs[:, :, c]) * system.windows[c]
    return np.fft.ifft2(accum).real


def subband_orientation(system: ShearletSystem, band: SubbandIndex) -> float:
    """Orientation of a directional subband, radians in ``(-pi/2, pi/2]``.

    The angle is measured in the frequency plane from the +xi1 axis.
    Horizontal-cone bands map to ``atan(k / 2**s)`` where ``s`` is the shear
    level of the band's scale; vertical-cone bands to the complementary
    angle, folded back into the half-open interval.  Both seam shears land
    exactly on ``+-pi/4``.
    """
    if band.is_lowpass:
        raise ValueError("the lowpass band has no orientation")
    if not 0 <= band.scale < len(system.levels):
        raise ValueError(f"scale {band.scale} not present in this system")
    level = system.levels[band.scale]
    if abs(band.shear) > 2**level:
        raise ValueError(
            f"shear {band.shear} outside +-{2**level} at scale {band.scale}"
        )
    ratio = band.shear / 2.0**level
    if band.cone == CONE_HORIZONTAL:
        return math.atan(ratio)
    theta = math.pi / 2 - math.atan(ratio)
    if theta > math.pi / 2:
        theta -= math.pi
    return theta
