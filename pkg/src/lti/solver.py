"""ADMM for weighted l1-analysis reconstruction with a nonnegativity bound.

Solves ``min_f  ||L f||_{1,w} + 1/2 ||R f - y||_2^2  s.t. f >= 0`` where
``R`` is the limited-angle scan operator and ``L`` a sparsifying analysis
map — the shearlet frame (whose Gram operator is the identity) or a
discrete gradient for the total-variation variant.

The scheme splits ``z = (L f, f)``: the f-update solves the normal
equations ``(rho0 R^T R + rho1 L^T L + rho2 I) f = rhs`` by warm-started
conjugate gradients, the coefficient block is soft-thresholded with
per-coefficient thresholds ``rho0 w / rho1``, and the image block is
clipped to the nonnegative orthant.  ``rho0`` scales the whole objective,
so it conditions the linear system without moving the minimizer; ``rho1``
and ``rho2`` are the usual penalty weights.  Iteration count is fixed —
the objective history is recorded for inspection, not used for stopping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import shearlet as _sh
from .tomo import ScanGeometry, radon_adjoint, radon_forward


@dataclass(frozen=True)
class AdmmParams:
    """Hyperparameters of the split scheme.

    ``scale_weights`` holds one nonnegative weight per directional scale,
    coarse to fine; the lowpass band carries its own (default unpenalized)
    weight.  ``rho2`` defaults to 1 and is rarely worth tuning.
    """

    rho0: float
    rho1: float
    scale_weights: tuple[float, ...]
    lowpass_weight: float = 0.0
    rho2: float = 1.0
    outer_iterations: int = 50
    cg_tol: float = 1e-4
    cg_max_iter: int = 30

    def __post_init__(self):
        if min(self.rho0, self.rho1, self.rho2) <= 0:
            raise ValueError("rho0, rho1, rho2 must be positive")
        if any(w < 0 for w in self.scale_weights) or self.lowpass_weight < 0:
            raise ValueError("weights must be nonnegative")
        if self.outer_iterations < 1:
            raise ValueError("need at least one outer iteration")
        object.__setattr__(self, "scale_weights", tuple(float(w) for w in self.scale_weights))


#: Appendix-style hyperparameter rows: rho0, rho1, and the per-scale weight
#: rule w_j = base**j / denominator with j counting scales from 1.
_PRESETS = {
    "ellipses50": (0.02, 0.1, 3.0, 400.0),
    "mayo60": (0.50, 0.1, 2.0, 400.0),
    "mayo75": (0.08, 0.5, 2.0, 72.0),
    "lotus60": (0.01, 0.1, 2.0, 40.0),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_params(name: str, n_scales: int, **overrides) -> AdmmParams:
    """Hyperparameters of a named experiment, expanded to ``n_scales`` scales."""
    try:
        rho0, rho1, base, denom = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None
    weights = tuple(base**j / denom for j in range(1, n_scales + 1))
    fields = {"rho0": rho0, "rho1": rho1, "scale_weights": weights}
    fields.update(overrides)
    return AdmmParams(**fields)


class AnalysisOperator(Protocol):
    """Sparsifying map with the pieces the f-update needs."""

    def forward(self, image: np.ndarray) -> np.ndarray: ...

    def adjoint(self, coeffs: np.ndarray) -> np.ndarray: ...

    def gram(self, image: np.ndarray) -> np.ndarray: ...

    def coefficient_weights(self, params: AdmmParams) -> np.ndarray: ...


class ShearletAnalysis:
    """Shearlet frame as an analysis operator; its Gram map is the identity."""

    def __init__(self, system: _sh.ShearletSystem):
        self.system = system

    def forward(self, image):
        return _sh.forward(self.system, image)

    def adjoint(self, coeffs):
        return _sh.adjoint(self.system, coeffs)

    def gram(self, image):
        # Parseval frame: L^T L = I exactly, so the f-update matrix reduces
        # to rho0 R^T R + (rho1 + rho2) I.
        return image

    def coefficient_weights(self, params: AdmmParams) -> np.ndarray:
        w = expand_weights(params.scale_weights, self.system, params.lowpass_weight)
        return w[np.newaxis, np.newaxis, :]


class GradientAnalysis:
    """Forward differences with replicated boundary; the anisotropic TV map."""

    def __init__(self, n: int):
        self.n = n

    def forward(self, image):
        coeffs = np.zeros((self.n, self.n, 2))
        coeffs[:, :-1, 0] = image[:, 1:] - image[:, :-1]
        coeffs[:-1, :, 1] = image[1:, :] - image[:-1, :]
        return coeffs

    def adjoint(self, coeffs):
        out = np.zeros((self.n, self.n))
        gx = coeffs[:, :, 0]
        out[:, :-1] -= gx[:, :-1]
        out[:, 1:] += gx[:, :-1]
        gy = coeffs[:, :, 1]
        out[:-1, :] -= gy[:-1, :]
        out[1:, :] += gy[:-1, :]
        return out

    def gram(self, image):
        return self.adjoint(self.forward(image))

    def coefficient_weights(self, params: AdmmParams) -> np.ndarray:
        if len(params.scale_weights) != 1:
            raise ValueError("the gradient operator has a single scale")
        return np.full((1, 1, 2), params.scale_weights[0])


def expand_weights(
    scale_weights, system: _sh.ShearletSystem, lowpass_weight: float = 0.0
) -> np.ndarray:
    """Per-subband weight vector: every band of scale j gets ``w_j``."""
    scale_weights = tuple(scale_weights)
    if len(scale_weights) != len(system.levels):
        raise ValueError(
            f"{len(scale_weights)} scale weights for {len(system.levels)} scales"
        )
    out = np.empty(system.n_subbands)
    for pos, band in enumerate(system.index):
        out[pos] = lowpass_weight if band.is_lowpass else scale_weights[band.scale]
    return out


def soft_threshold(a: np.ndarray, b) -> np.ndarray:
    """Elementwise shrink toward zero: ``sign(a) * max(|a| - b, 0)``."""
    b = np.asarray(b)
    if np.any(b < 0):
        raise ValueError("threshold must be nonnegative")
    return np.sign(a) * np.maximum(np.abs(a) - b, 0.0)


@dataclass
class CgReport:
    iterations: int
    rel_residual: float
    failed: bool = False


def cg_solve(
    normal_op: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    warm_start: np.ndarray | None = None,
    tol: float = 1e-4,
    max_iter: int = 30,
) -> tuple[np.ndarray, CgReport]:
    """Conjugate gradients for an SPD map; returns the best iterate seen.

    A non-finite residual (diverging or indefinite operator) stops the loop
    and is reported through ``CgReport.failed`` rather than raised, so the
    caller keeps the last usable iterate.
    """
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), CgReport(0, 0.0)
    x = np.zeros_like(rhs) if warm_start is None else warm_start.astype(float, copy=True)
    r = rhs - normal_op(x)
    p = r.copy()
    rs = np.vdot(r, r).real
    best_x, best_res = x.copy(), math.sqrt(rs)
    iterations = 0
    failed = False
    for iterations in range(1, max_iter + 1):
        if math.sqrt(rs) <= tol * rhs_norm:
            iterations -= 1
            break
        ap = normal_op(p)
        denom = np.vdot(p, ap).real
        if not np.isfinite(denom) or denom <= 0:
            failed = True
            break
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = np.vdot(r, r).real
        if not np.isfinite(rs_new):
            failed = True
            break
        if math.sqrt(rs_new) < best_res:
            best_x, best_res = x.copy(), math.sqrt(rs_new)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return best_x, CgReport(iterations, best_res / rhs_norm, failed)


@dataclass
class SolverState:
    """Raw final iterates plus per-iteration diagnostics."""

    f: np.ndarray
    z_coeffs: np.ndarray
    z_image: np.ndarray
    u_coeffs: np.ndarray
    u_image: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    primal_residual_history: list[float] = field(default_factory=list)
    cg_warnings: int = 0


def objective(
    f: np.ndarray,
    y: np.ndarray,
    geometry: ScanGeometry,
    L: AnalysisOperator,
    params: AdmmParams,
) -> float:
    """Value of ``||L f||_{1,w} + 1/2 ||R f - y||^2`` with the f >= 0 bound.

    Entries below ``-1e-12`` make the constraint indicator infinite.
    """
    if np.min(f) < -1e-12:
        return math.inf
    residual = radon_forward(f, geometry) - y
    weighted = L.coefficient_weights(params) * np.abs(L.forward(f))
    return float(np.sum(weighted) + 0.5 * np.vdot(residual, residual).real)


def _normal_operator(
    geometry: ScanGeometry, n: int, L: AnalysisOperator, params: AdmmParams
) -> Callable[[np.ndarray], np.ndarray]:
    """The f-update matrix ``rho0 R^T R + rho1 L^T L + rho2 I`` as a map."""

    def apply(x: np.ndarray) -> np.ndarray:
        data = radon_adjoint(radon_forward(x, geometry), geometry, n)
        return params.rho0 * data + params.rho1 * L.gram(x) + params.rho2 * x

    return apply


def admm_solve(
    y: np.ndarray,
    geometry: ScanGeometry,
    L: AnalysisOperator,
    params: AdmmParams,
) -> tuple[np.ndarray, SolverState]:
    """Run the fixed iterate scheme; returns ``max(f_final, 0)`` and state.

    Initialization is the backprojection ``f = R^T y`` with zero split and
    dual variables.  A CG breakdown counts as a warning in the state and the
    loop continues with the best CG iterate; a non-finite objective aborts.
    """
    y = np.asarray(y, dtype=np.float64)
    n = _image_size(L, y, geometry)
    f = radon_adjoint(y, geometry, n)
    z1 = np.zeros_like(L.forward(f))
    z2 = np.zeros_like(f)
    u1 = np.zeros_like(z1)
    u2 = np.zeros_like(f)
    threshold = (params.rho0 / params.rho1) * np.broadcast_to(
        L.coefficient_weights(params), z1.shape
    )
    normal_op = _normal_operator(geometry, n, L, params)
    rho_data = params.rho0 * radon_adjoint(y, geometry, n)
    state = SolverState(f, z1, z2, u1, u2)
    for _ in range(params.outer_iterations):
        rhs = rho_data + params.rho1 * L.adjoint(z1 - u1) + params.rho2 * (z2 - u2)
        f, report = cg_solve(normal_op, rhs, f, params.cg_tol, params.cg_max_iter)
        if report.failed:
            state.cg_warnings += 1
        lf = L.forward(f)
        z1 = soft_threshold(lf + u1, threshold)
        z2 = np.maximum(f + u2, 0.0)
        u1 = u1 + lf - z1
        u2 = u2 + f - z2
        primal = np.linalg.norm(lf - z1) + np.linalg.norm(f - z2)
        state.primal_residual_history.append(float(primal))
        value = objective(np.maximum(f, 0.0), y, geometry, L, params)
        state.objective_history.append(value)
        if not math.isfinite(value):
            raise FloatingPointError(
                f"objective became non-finite at iteration {len(state.objective_history)}"
            )
    state.f, state.z_coeffs, state.z_image = f, z1, z2
    state.u_coeffs, state.u_image = u1, u2
    return np.maximum(f, 0.0), state


def _image_size(L: AnalysisOperator, y: np.ndarray, geometry: ScanGeometry) -> int:
    if isinstance(L, ShearletAnalysis):
        return L.system.n
    if isinstance(L, GradientAnalysis):
        return L.n
    probe = getattr(L, "n", None)
    if probe is None:
        raise TypeError("analysis operator does not expose its grid size")
    return int(probe)
