"""Image-quality measures: relative error, PSNR and SSIM, plus report tables.

All metrics compare a reconstruction against a ground-truth image of the same
shape.  ``psnr`` returns ``math.inf`` for identical images; text formatting
caps that sentinel at 99 dB.  SSIM uses a fixed 11x11 Gaussian window with
sigma 1.5, K1 = 0.01, K2 = 0.03 and dynamic range max(truth) - min(truth),
evaluated on the valid (fully overlapping) region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
PSNR_TEXT_CAP = 99.0


class UndefinedMetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


def _check_shapes(recon: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    recon = np.asarray(recon, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if recon.shape != truth.shape:
        raise ValueError(f"shape mismatch: {recon.shape} vs {truth.shape}")
    return recon, truth


def relative_error(recon: np.ndarray, truth: np.ndarray) -> float:
    """``||recon - truth||_2 / ||truth||_2``; undefined for zero truth."""
    recon, truth = _check_shapes(recon, truth)
    denom = np.linalg.norm(truth)
    if denom == 0.0:
        raise UndefinedMetricError("relative error undefined for zero truth")
    return float(np.linalg.norm(recon - truth) / denom)


def psnr(recon: np.ndarray, truth: np.ndarray, peak: float | None = None) -> float:
    """``10 log10(peak^2 / MSE)`` in dB; peak defaults to max(truth)."""
    recon, truth = _check_shapes(recon, truth)
    if peak is None:
        peak = float(truth.max())
    mse = float(np.mean((recon - truth) ** 2))
    if mse == 0.0:
        return math.inf
    if peak <= 0.0:
        raise UndefinedMetricError("psnr needs a positive peak value")
    return float(10.0 * math.log10(peak * peak / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(recon: np.ndarray, truth: np.ndarray) -> float:
    """Mean local structural similarity over the valid region."""
    recon, truth = _check_shapes(recon, truth)
    if min(recon.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW} pixels per side")
    drange = float(truth.max() - truth.min())
    if drange == 0.0:
        # Degenerate constant truth: fall back to unit range so identical
        # inputs still score 1 instead of 0/0.
        drange = 1.0
    c1 = (SSIM_K1 * drange) ** 2
    c2 = (SSIM_K2 * drange) ** 2
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    def filt(img: np.ndarray) -> np.ndarray:
        return convolve2d(img, win, mode="valid")

    mu_x = filt(recon)
    mu_y = filt(truth)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    var_x = filt(recon * recon) - mu_xx
    var_y = filt(truth * truth) - mu_yy
    cov = filt(recon * truth) - mu_xy
    num = (2.0 * mu_xy + c1) * (2.0 * cov + c2)
    den = (mu_xx + mu_yy + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


@dataclass
class MetricRow:
    """Metrics of one method, either per-image or aggregated."""

    name: str
    re: float
    psnr: float
    ssim: float
    count: int = 1


@dataclass
class MetricReport:
    """A table of metric rows with text and CSV renderings."""

    rows: list[MetricRow] = field(default_factory=list)

    def add(self, row: MetricRow) -> None:
        self.rows.append(row)

    def as_text(self) -> str:
        header = f"{'method':<16}{'RE':>10}{'PSNR':>10}{'SSIM':>10}{'n':>6}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            shown_psnr = min(r.psnr, PSNR_TEXT_CAP)
            lines.append(
                f"{r.name:<16}{r.re:>10.4f}{shown_psnr:>10.2f}{r.ssim:>10.4f}{r.count:>6d}"
            )
        return "\n".join(lines)

    def as_csv(self) -> str:
        lines = ["method,re,psnr,ssim,count"]
        for r in self.rows:
            lines.append(f"{r.name},{r.re:.10g},{r.psnr:.10g},{r.ssim:.10g},{r.count}")
        return "\n".join(lines)


def evaluate(name: str, recon: np.ndarray, truth: np.ndarray) -> MetricRow:
    """All three metrics of one reconstruction against its truth."""
    return MetricRow(
        name=name,
        re=relative_error(recon, truth),
        psnr=psnr(recon, truth),
        ssim=ssim(recon, truth),
    )


def aggregate(name: str, rows: list[MetricRow]) -> MetricRow:
    """Mean of per-image rows (PSNR sentinel values propagate as inf)."""
    if not rows:
        raise UndefinedMetricError("cannot aggregate an empty row list")
    return MetricRow(
        name=name,
        re=float(np.mean([r.re for r in rows])),
        psnr=float(np.mean([r.psnr for r in rows])),
        ssim=float(np.mean([r.ssim for r in rows])),
        count=sum(r.count for r in rows),
    )
