"""Partition shearlet subbands into visible and invisible sets for a wedge.

A limited-angle scan with half-angle ``phi`` measures only the frequency
wedge ``W_phi = {|angle from the xi1 axis| <= phi}``.  Because every subband
is bandlimited, its spectrum — and therefore its visibility — does not
depend on spatial translation, so flags are stored once per subband rather
than per coefficient.

Three classification rules are provided: by thresholded frequency support
(``wedge_classify``), by nominal subband orientation
(``orientation_classify``), and by the measured norms of projected atoms
(``quantile_classify``, which needs no geometric knowledge of the scanner
and generalizes to other measurement operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .shearlet import ShearletSystem, subband_orientation

#: Squared-magnitude threshold deciding window support on the discrete grid.
SUPPORT_THRESHOLD = 1e-12

METHOD_WEDGE = "wedge-support"
METHOD_ORIENTATION = "orientation"
METHOD_QUANTILE = "quantile"


@dataclass(frozen=True)
class VisibilityMask:
    """Per-subband visible/invisible flags plus the wedge they refer to."""

    flags: tuple[bool, ...]
    half_angle: float
    method: str

    @property
    def n_visible(self) -> int:
        return sum(self.flags)

    def as_array(self) -> np.ndarray:
        return np.array(self.flags, dtype=bool)

    def positions(self, keep: str = "visible") -> tuple[int, ...]:
        """Subband positions carrying the requested flag."""
        want = _want_visible(keep)
        return tuple(i for i, v in enumerate(self.flags) if v == want)


def _want_visible(keep: str) -> bool:
    if keep not in ("visible", "invisible"):
        raise ValueError(f"keep must be 'visible' or 'invisible', got {keep!r}")
    return keep == "visible"


def _check_angle(half_angle: float) -> float:
    half_angle = float(half_angle)
    if not 0.0 < half_angle <= math.pi / 2:
        raise ValueError(f"wedge half-angle must be in (0, pi/2], got {half_angle}")
    return half_angle


def wedge_classify(system: ShearletSystem, half_angle: float) -> VisibilityMask:
    """Flag subbands whose frequency support meets the visible wedge.

    A subband is invisible exactly when its thresholded support has empty
    intersection with ``W_phi`` on the discrete grid; the boundary of the
    wedge counts as visible.
    """
    half_angle = _check_angle(half_angle)
    n = system.n
    freq = np.abs(np.fft.fftfreq(n) * n)
    omega = np.arctan2(freq[:, np.newaxis], freq[np.newaxis, :])
    in_wedge = omega <= half_angle
    flags = tuple(
        bool(np.any((w**2 > SUPPORT_THRESHOLD) & in_wedge)) for w in system.windows
    )
    return VisibilityMask(flags, half_angle, METHOD_WEDGE)


def orientation_classify(system: ShearletSystem, half_angle: float) -> VisibilityMask:
    """Flag subbands by nominal orientation: visible iff ``|theta| <= phi``.

    Coarser than ``wedge_classify`` for subbands straddling the wedge
    boundary: a seam subband at ``+-pi/4`` counts as visible for any
    ``phi >= pi/4`` even though part of its support lies outside the wedge.
    """
    half_angle = _check_angle(half_angle)
    flags = tuple(
        band.is_lowpass
        or abs(subband_orientation(system, band)) <= half_angle
        for band in system.index
    )
    return VisibilityMask(flags, half_angle, METHOD_ORIENTATION)


def quantile_classify(
    system: ShearletSystem,
    forward_op: Callable[[np.ndarray], np.ndarray],
    half_angle: float,
) -> VisibilityMask:
    """Flag subbands by the measured norm of one projected atom each.

    For every directional subband a centered atom is synthesized and pushed
    through ``forward_op``; within each scale, subbands whose projected norm
    is strictly above the empirical ``phi/pi`` quantile of that scale's
    norms are visible.  Ties fall invisible.  The lowpass band — and any
    degenerate scale holding a single subband, where a quantile carries no
    information — is flagged visible.

    Atoms of one bandlimited subband differ only by translation, so a single
    representative per subband suffices up to boundary effects.
    """
    half_angle = _check_angle(half_angle)
    p = half_angle / math.pi
    flags = np.zeros(system.n_subbands, dtype=bool)
    norms = np.empty(system.n_subbands)
    for c, band in enumerate(system.index):
        if band.is_lowpass:
            flags[c] = True
            continue
        atom = np.fft.fftshift(np.fft.ifft2(system.windows[c])).real
        norms[c] = np.linalg.norm(forward_op(atom))
    for scale, positions in system.scale_slices().items():
        if scale < 0:
            continue
        if len(positions) == 1:
            flags[positions[0]] = True
            continue
        threshold = np.quantile(norms[positions], p)
        for c in positions:
            flags[c] = norms[c] > threshold
    return VisibilityMask(tuple(bool(f) for f in flags), half_angle, METHOD_QUANTILE)


def mask_restrict(
    coeffs: np.ndarray, mask: VisibilityMask, keep: str = "visible"
) -> np.ndarray:
    """Zero the complement of the requested flag; kept subbands pass bit-exactly."""
    want = _want_visible(keep)
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 3 or coeffs.shape[2] != len(mask.flags):
        raise ValueError(
            f"coefficient shape {coeffs.shape} does not match {len(mask.flags)} subbands"
        )
    out = coeffs.copy()
    drop = [i for i, v in enumerate(mask.flags) if v != want]
    out[:, :, drop] = 0.0
    return out
