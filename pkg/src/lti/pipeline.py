"""Three-step reconstruction pipeline and oracle-replacement experiments.

Step 1 solves the l1-analysis problem and analyzes the result into
coefficients.  Step 2 asks an inferencer for the invisible coefficients —
zeros (pure l1 baseline), the ground truth (oracle studies), or an external
command exchanging coefficient files on disk.  Step 3 synthesizes the final
image from the visible coefficients of Step 1 plus the inferred invisible
ones.

The reliability contract is structural: whatever an inferencer returns is
re-masked to the invisible set, and Step 3 refuses tensors whose nonzero
supports overlap, so visible content can only ever come from the measured
data.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from . import shearlet as _sh
from . import tensorio as _tio
from .phantom import make_circle, make_random_ellipses
from .solver import (
    AdmmParams,
    GradientAnalysis,
    ShearletAnalysis,
    admm_solve,
    preset_params,
)
from .tomo import NoiseSpec, ScanGeometry, default_geometry, fbp, simulate_measurements
from .visibility import VisibilityMask, mask_restrict, wedge_classify

#: Environment variable overriding where external-inference files are staged.
EXCHANGE_DIR_ENV = "LTI_EXCHANGE_DIR"

DEFAULT_TIMEOUT = 600.0


class InferenceError(RuntimeError):
    """Base class for Step-2 external inference failures."""


class InferenceCommandError(InferenceError):
    """The external command could not run or exited nonzero."""


class InferenceOutputError(InferenceError):
    """The external command produced a missing or malformed tensor."""


class InferenceTimeoutError(InferenceError):
    """The external command exceeded its time budget."""


class CoefficientOverlapError(ValueError):
    """Visible and inferred tensors carry nonzero entries in the same subband."""


class ExperimentError(ValueError):
    """An experiment configuration cannot be run."""


def records_for(
    system: _sh.ShearletSystem, mask: VisibilityMask | None = None
) -> list[_tio.SubbandRecord]:
    """Subband metadata records for a coefficient file, with visibility flags."""
    flags = mask.flags if mask is not None else (True,) * system.n_subbands
    return [
        _tio.SubbandRecord(band.scale, band.shear, band.cone, visible)
        for band, visible in zip(system.index, flags)
    ]


class ZeroInferencer:
    """Predict nothing: the pipeline reduces to the pure l1 reconstruction."""

    def infer(self, coeffs, mask, system):
        return np.zeros_like(coeffs)


class OracleInferencer:
    """Answer with the ground truth's coefficients; upper-bound studies."""

    def __init__(self, truth: np.ndarray):
        self.truth = np.asarray(truth, dtype=np.float64)

    def infer(self, coeffs, mask, system):
        return _sh.forward(system, self.truth)


class ExternalInferencer:
    """Run a subprocess that maps a coefficient file to a coefficient file.

    The command string contains ``{in}`` and ``{out}`` placeholders that are
    substituted with staged tensorio paths after shell-style tokenization,
    so paths with spaces survive.  Exchange files live in ``exchange_dir``
    (default: ``$LTI_EXCHANGE_DIR`` or a fresh temporary directory) and are
    removed after each call.
    """

    def __init__(
        self,
        command: str,
        exchange_dir: str | Path | None = None,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        if "{in}" not in command or "{out}" not in command:
            raise ValueError("command must contain {in} and {out} placeholders")
        self.command = command
        if exchange_dir is None:
            exchange_dir = os.environ.get(EXCHANGE_DIR_ENV) or tempfile.mkdtemp(
                prefix="lti-exchange-"
            )
        self.exchange_dir = Path(exchange_dir)
        self.timeout = timeout

    def infer(self, coeffs, mask, system):
        self.exchange_dir.mkdir(parents=True, exist_ok=True)
        tag = uuid.uuid4().hex[:12]
        in_path = self.exchange_dir / f"in-{tag}.lti"
        out_path = self.exchange_dir / f"out-{tag}.lti"
        try:
            _tio.write_coeffs(coeffs, tuple(records_for(system, mask)), in_path)
            tokens = [
                token.replace("{in}", str(in_path)).replace("{out}", str(out_path))
                for token in shlex.split(self.command)
            ]
            try:
                proc = subprocess.run(
                    tokens, capture_output=True, text=True, timeout=self.timeout
                )
            except subprocess.TimeoutExpired as exc:
                raise InferenceTimeoutError(
                    f"inference command exceeded {self.timeout:.0f}s"
                ) from exc
            except OSError as exc:
                raise InferenceCommandError(f"cannot run {tokens[0]!r}: {exc}") from exc
            if proc.returncode != 0:
                raise InferenceCommandError(
                    f"inference command exited {proc.returncode}: "
                    f"{proc.stderr.strip()[-500:]}"
                )
            try:
                result = _tio.read_tensor(out_path)
            except FileNotFoundError as exc:
                raise InferenceOutputError("command produced no output tensor") from exc
            except _tio.TensorFormatError as exc:
                raise InferenceOutputError(f"malformed output tensor: {exc}") from exc
            if result.kind != _tio.KIND_COEFFS or result.data.shape != coeffs.shape:
                raise InferenceOutputError(
                    f"output tensor has kind {result.kind}, shape {result.data.shape}; "
                    f"expected coefficients of shape {coeffs.shape}"
                )
            expected = [(b.scale, b.shear, b.cone) for b in system.index]
            got = [(r.scale, r.shear, r.cone) for r in result.records]
            if got != expected:
                raise InferenceOutputError("output subband records do not match system")
            return result.data.astype(np.float64)
        finally:
            for path in (in_path, out_path):
                path.unlink(missing_ok=True)


def step1(
    y: np.ndarray,
    geometry: ScanGeometry,
    system: _sh.ShearletSystem,
    params: AdmmParams,
) -> tuple[np.ndarray, np.ndarray]:
    """l1-analysis reconstruction plus its coefficient analysis."""
    f_star, _ = admm_solve(y, geometry, ShearletAnalysis(system), params)
    return f_star, _sh.forward(system, f_star)


def step2(
    coeffs: np.ndarray,
    mask: VisibilityMask,
    inferencer,
    system: _sh.ShearletSystem,
) -> np.ndarray:
    """Infer invisible coefficients; the result is force-masked to them."""
    if coeffs.shape != (system.n, system.n, system.n_subbands):
        raise ValueError(f"coefficient shape {coeffs.shape} does not match system")
    predicted = inferencer.infer(coeffs, mask, system)
    return mask_restrict(predicted, mask, "invisible")


def step3(
    coeffs_vis: np.ndarray, inferred: np.ndarray, system: _sh.ShearletSystem
) -> np.ndarray:
    """Synthesize the combined image from disjointly-supported tensors.

    Refuses inputs where any subband carries nonzero entries in both
    tensors; under that check the combined tensor's entries on the visible
    support are bit-equal to ``coeffs_vis``.
    """
    if coeffs_vis.shape != inferred.shape:
        raise ValueError("coefficient tensors differ in shape")
    both = np.logical_and(
        np.any(coeffs_vis, axis=(0, 1)), np.any(inferred, axis=(0, 1))
    )
    if np.any(both):
        bad = np.nonzero(both)[0]
        raise CoefficientOverlapError(
            f"subbands {bad.tolist()} are nonzero in both tensors"
        )
    return _sh.adjoint(system, coeffs_vis + inferred)


def fbp_oracle_replace(
    f_fbp: np.ndarray,
    truth: np.ndarray,
    system: _sh.ShearletSystem,
    mask: VisibilityMask,
) -> np.ndarray:
    """Filtered-backprojection variant of the oracle study.

    Keeps the visible coefficients of the FBP image (streaks included) and
    swaps in the truth's invisible ones.
    """
    if f_fbp.shape != truth.shape:
        raise ValueError("image shapes differ")
    vis = mask_restrict(_sh.forward(system, f_fbp), mask, "visible")
    inv = mask_restrict(_sh.forward(system, truth), mask, "invisible")
    return _sh.adjoint(system, vis + inv)


def subband_mosaic(
    coeffs: np.ndarray, system: _sh.ShearletSystem
) -> list[tuple[float, np.ndarray]]:
    """Max-projection of |coefficients| over scales, grouped by orientation."""
    groups: dict[float, np.ndarray] = {}
    for pos, band in enumerate(system.index):
        if band.is_lowpass:
            continue
        theta = round(_sh.subband_orientation(system, band), 12)
        layer = np.abs(coeffs[:, :, pos])
        if theta in groups:
            groups[theta] = np.maximum(groups[theta], layer)
        else:
            groups[theta] = layer
    return sorted(groups.items())


# --------------------------------------------------------------- experiments


@dataclass(frozen=True)
class ExperimentConfig:
    """A Table-style comparison over freshly generated test phantoms."""

    n: int = 128
    half_angle: float = float(np.radians(50.0))
    n_angles: int | None = None
    n_images: int = 20
    seed: int = 0
    noise_sigma_rel: float = 0.01
    oversample: int = 2
    methods: tuple[str, ...] = ("fbp", "l1-shearlet")
    preset: str = "ellipses50"
    levels: tuple[int, ...] | None = None
    tv_weight: float = 0.02
    inferencer: object | None = None

    def geometry(self) -> ScanGeometry:
        return default_geometry(self.n, self.half_angle, n_angles=self.n_angles)


KNOWN_METHODS = ("fbp", "l1-shearlet", "tv", "lti")


def _reconstruct(method, y, geometry, system, params, config, mask):
    if method == "fbp":
        return fbp(y, geometry, config.n)
    if method == "l1-shearlet":
        f_star, _ = step1(y, geometry, system, params)
        return f_star
    if method == "tv":
        tv_params = AdmmParams(1.0, 1.0, (config.tv_weight,))
        image, _ = admm_solve(y, geometry, GradientAnalysis(config.n), tv_params)
        return image
    if method == "lti":
        if config.inferencer is None:
            raise ExperimentError("method 'lti' needs an inferencer")
        f_star, coeffs = step1(y, geometry, system, params)
        inferred = step2(coeffs, mask, config.inferencer, system)
        return step3(mask_restrict(coeffs, mask, "visible"), inferred, system)
    raise ExperimentError(f"unknown method {method!r}; choose from {KNOWN_METHODS}")


def run_experiment(config: ExperimentConfig) -> _metrics.MetricReport:
    """Mean metrics per method over the generated test phantoms."""
    if config.n_images < 1:
        raise ExperimentError("experiment needs at least one test image")
    for method in config.methods:
        if method not in KNOWN_METHODS:
            raise ExperimentError(f"unknown method {method!r}")
    geometry = config.geometry()
    system = _sh.build_system(config.n, config.levels)
    params = preset_params(config.preset, len(system.levels))
    mask = wedge_classify(system, config.half_angle)
    phantom_seeds = np.random.SeedSequence(config.seed).generate_state(
        2 * config.n_images, np.uint64
    )
    rows: list[list[_metrics.MetricRow]] = [[] for _ in config.methods]
    for i in range(config.n_images):
        phantom, _ = make_random_ellipses(
            config.n, np.random.default_rng(phantom_seeds[2 * i])
        )
        y = simulate_measurements(
            phantom,
            geometry,
            NoiseSpec(config.noise_sigma_rel, seed=int(phantom_seeds[2 * i + 1])),
            oversample=config.oversample,
        )
        for j, method in enumerate(config.methods):
            image = _reconstruct(method, y, geometry, system, params, config, mask)
            rows[j].append(_metrics.evaluate(method, image, phantom))
    report = _metrics.MetricReport()
    for j, method in enumerate(config.methods):
        report.add(_metrics.aggregate(method, rows[j]))
    return report


@dataclass
class OracleStudy:
    """Images and errors of the circle oracle-replacement experiment."""

    truth: np.ndarray
    f_fbp: np.ndarray
    f_star: np.ndarray
    f_combined: np.ndarray
    f_combined_clipped: np.ndarray
    f_fbp_replaced: np.ndarray
    errors: dict[str, float] = field(default_factory=dict)

    def report(self) -> _metrics.MetricReport:
        rep = _metrics.MetricReport()
        for name, image in (
            ("fbp", self.f_fbp),
            ("l1-shearlet", self.f_star),
            ("oracle-combined", self.f_combined),
            ("oracle-combined+clip", self.f_combined_clipped),
            ("fbp-oracle-replace", self.f_fbp_replaced),
        ):
            rep.add(_metrics.evaluate(name, image, self.truth))
        return rep


def oracle_experiment(
    n: int = 256,
    half_angle: float = float(np.radians(50.0)),
    radius_frac: float = 0.3,
    noise_sigma_rel: float = 0.01,
    noise_seed: int = 0,
    preset: str = "ellipses50",
    levels: tuple[int, ...] | None = None,
    solver_overrides: dict | None = None,
) -> OracleStudy:
    """Circle benchmark with ground-truth invisible coefficients swapped in.

    Measures how much of the reconstruction error is attributable to the
    invisible wedge: combining the l1 solution's visible coefficients with
    the truth's invisible ones should beat both the l1 solution and the
    analogous replacement on the FBP image.  ``solver_overrides`` replaces
    preset solver fields, e.g. to run the solver to tight convergence when
    the study's point is the minimizer rather than an early-stopped iterate.
    """
    geometry = default_geometry(n, half_angle)
    system = _sh.build_system(n, levels)
    params = preset_params(preset, len(system.levels), **(solver_overrides or {}))
    mask = wedge_classify(system, half_angle)
    truth = make_circle(n, radius_frac, 1.0)
    y = simulate_measurements(
        truth, geometry, NoiseSpec(noise_sigma_rel, seed=noise_seed), oversample=2
    )
    f_fbp = fbp(y, geometry, n)
    f_star, coeffs = step1(y, geometry, system, params)
    inferred = step2(coeffs, mask, OracleInferencer(truth), system)
    f_combined = step3(mask_restrict(coeffs, mask, "visible"), inferred, system)
    f_replaced = fbp_oracle_replace(f_fbp, truth, system, mask)
    study = OracleStudy(
        truth=truth,
        f_fbp=f_fbp,
        f_star=f_star,
        f_combined=f_combined,
        f_combined_clipped=np.maximum(f_combined, 0.0),
        f_fbp_replaced=f_replaced,
    )
    for name, image in (
        ("fbp", f_fbp),
        ("l1-shearlet", f_star),
        ("oracle-combined", f_combined),
        ("oracle-combined+clip", study.f_combined_clipped),
        ("fbp-oracle-replace", f_replaced),
    ):
        study.errors[name] = _metrics.relative_error(image, truth)
    return study
