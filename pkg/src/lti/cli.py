"""Command-line front end for simulation, reconstruction and reports.

Every subcommand accepts ``--config FILE`` naming a line-oriented
``key=value`` file (``#`` starts a comment, blank lines are skipped); keys
are the long option names with ``-`` or ``_`` interchangeable.  Values from
the file fill in options not given explicitly, so a config file can carry a
whole experiment while the command line overrides single knobs.

Angles are given in degrees on the command line and converted internally.
All tensors cross the boundary as interchange files; nothing is read from
or written to stdin/stdout except reports and summaries.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from . import pipeline as _pipe
from . import shearlet as _sh
from . import tensorio as _tio
from . import visibility as _vis
from .phantom import make_circle, make_random_ellipses
from .solver import AdmmParams, GradientAnalysis, PRESET_NAMES, admm_solve, preset_params
from .tomo import (
    FilterKind,
    NoiseSpec,
    ScanGeometry,
    default_geometry,
    fbp,
    radon_forward,
    simulate_measurements,
)

RULES = (_vis.METHOD_WEDGE, _vis.METHOD_ORIENTATION, _vis.METHOD_QUANTILE)


class CliError(ValueError):
    """A subcommand cannot proceed with the given options or inputs."""


# ------------------------------------------------------------- config files


def _load_config(path: str | Path) -> dict[str, str]:
    """Parse a line-oriented key=value file into normalized string pairs."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        pairs[key.strip().replace("-", "_")] = value.strip()
    return pairs


def _coerce(action: argparse.Action, text: str):
    """Convert one config value with the option's own type machinery."""
    if action.nargs == 0:  # store_true / store_false switches
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise CliError(f"{action.dest}: expected a boolean, got {text!r}")
    cast = action.type if callable(action.type) else str
    if action.nargs in ("+", "*"):
        values = [cast(token) for token in text.replace(",", " ").split()]
        if not values and action.nargs == "+":
            raise CliError(f"{action.dest}: expected at least one value")
        items = values
    else:
        items = [cast(text)]
    if action.choices is not None:
        for item in items:
            if item not in action.choices:
                raise CliError(
                    f"{action.dest}: {item!r} is not one of {tuple(action.choices)}"
                )
    return items if action.nargs in ("+", "*") else items[0]


def _merge_config(
    args: argparse.Namespace, subparser: argparse.ArgumentParser, argv: list[str]
) -> None:
    """Fill namespace fields from the config file, explicit flags winning."""
    actions: dict[str, argparse.Action] = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            actions[opt.lstrip("-").replace("-", "_")] = action
        actions[action.dest] = action
    for key, text in _load_config(args.config).items():
        if key == "config":
            continue
        action = actions.get(key)
        if action is None or not action.option_strings:
            raise CliError(f"config key {key!r} is not an option of this subcommand")
        given = any(
            token == opt or token.startswith(opt + "=")
            for token in argv
            for opt in action.option_strings
        )
        if not given:
            setattr(args, action.dest, _coerce(action, text))


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise CliError(f"--{name.replace('_', '-')} is required")


# ----------------------------------------------------------- shared helpers


def _half_angle(degrees: float) -> float:
    if not 0.0 < degrees <= 90.0:
        raise CliError(f"half-angle must be in (0, 90] degrees, got {degrees}")
    return math.radians(degrees)


def _parse_levels(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(token) for token in text.replace(",", " ").split())
    except ValueError:
        raise CliError(f"levels must be a comma-separated integer list, got {text!r}")


def _read_kind(path: str, kind: str) -> _tio.TensorFile:
    tensor = _tio.read_tensor(path)
    if tensor.kind != kind:
        raise CliError(f"{path}: expected {kind!r} data, found {tensor.kind!r}")
    return tensor


def _levels_from_records(records: tuple[_tio.SubbandRecord, ...]) -> tuple[int, ...]:
    """Recover the per-scale shear levels from a coefficient file's records.

    The reconstruction is validated by re-deriving the canonical subband
    enumeration, so files with foreign orderings are rejected rather than
    misread.
    """
    shear_max: dict[int, int] = {}
    for record in records:
        if record.scale >= 0:
            shear_max[record.scale] = max(
                shear_max.get(record.scale, 0), abs(record.shear)
            )
    scales = sorted(shear_max)
    if scales != list(range(len(scales))):
        raise CliError("coefficient records do not form contiguous scales")
    levels = tuple(int(round(math.log2(max(shear_max[s], 1)))) for s in scales)
    expected = [(b.scale, b.shear, b.cone) for b in _sh.subband_list(levels)]
    if [(r.scale, r.shear, r.cone) for r in records] != expected:
        raise CliError("coefficient records do not match the canonical ordering")
    return levels


def _classify(
    rule: str,
    system: _sh.ShearletSystem,
    half_angle: float,
    geometry: ScanGeometry | None = None,
) -> _vis.VisibilityMask:
    if rule == _vis.METHOD_WEDGE:
        return _vis.wedge_classify(system, half_angle)
    if rule == _vis.METHOD_ORIENTATION:
        return _vis.orientation_classify(system, half_angle)
    if rule == _vis.METHOD_QUANTILE:
        if geometry is None:
            geometry = default_geometry(system.n, half_angle)
        return _vis.quantile_classify(
            system, lambda image: radon_forward(image, geometry), half_angle
        )
    raise CliError(f"unknown visibility rule {rule!r}")


def _admm_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    if args.iterations is not None:
        overrides["outer_iterations"] = args.iterations
    if args.rho0 is not None:
        overrides["rho0"] = args.rho0
    if args.rho1 is not None:
        overrides["rho1"] = args.rho1
    if args.cg_tol is not None:
        overrides["cg_tol"] = args.cg_tol
    if args.cg_max_iter is not None:
        overrides["cg_max_iter"] = args.cg_max_iter
    return overrides


def _emit_report(report: _metrics.MetricReport, csv_path: str | None) -> None:
    print(report.as_text())
    if csv_path is not None:
        Path(csv_path).write_text(report.as_csv() + "\n")


# ------------------------------------------------------------- subcommands


def _cmd_simulate(args: argparse.Namespace) -> int:
    _require(args, "out")
    half_angle = _half_angle(args.half_angle)
    if args.image is not None:
        phantom = _read_kind(args.image, _tio.KIND_IMAGE).data.astype(np.float64)
        n = phantom.shape[0]
        if phantom.shape[0] != phantom.shape[1]:
            raise CliError(f"{args.image}: phantom must be square")
    elif args.phantom == "circle":
        n = args.n
        phantom = make_circle(n, args.radius_frac, args.value)
    else:
        n = args.n
        phantom, _ = make_random_ellipses(n, np.random.default_rng(args.seed))
    geometry = default_geometry(n, half_angle, n_angles=args.n_angles)
    sinogram = simulate_measurements(
        phantom,
        geometry,
        NoiseSpec(args.noise, seed=args.noise_seed),
        oversample=args.oversample,
    )
    _tio.write_sinogram(sinogram, args.out)
    if args.save_phantom is not None:
        _tio.write_image(phantom, args.save_phantom)
    print(
        f"simulate: {n}x{n} phantom -> {sinogram.shape[0]}x{sinogram.shape[1]} "
        f"sinogram ({args.out})"
    )
    return 0


def _cmd_reconstruct(args: argparse.Namespace) -> int:
    _require(args, "infile", "out", "n")
    half_angle = _half_angle(args.half_angle)
    sinogram = _read_kind(args.infile, _tio.KIND_SINOGRAM).data.astype(np.float64)
    geometry = ScanGeometry(
        half_angle=half_angle,
        n_angles=sinogram.shape[0],
        n_det=sinogram.shape[1],
        det_spacing=args.det_spacing,
        pixel_spacing=1.0,
    )
    levels = _parse_levels(args.levels) if args.levels else None
    if args.method == "fbp":
        image = fbp(sinogram, geometry, args.n, args.filter)
        system = _sh.build_system(args.n, levels) if args.save_coeffs else None
    elif args.method == "tv":
        params = AdmmParams(
            rho0=args.rho0 if args.rho0 is not None else 1.0,
            rho1=args.rho1 if args.rho1 is not None else 1.0,
            scale_weights=(args.tv_weight,),
            **{
                k: v
                for k, v in _admm_overrides(args).items()
                if k not in ("rho0", "rho1")
            },
        )
        image, _ = admm_solve(sinogram, geometry, GradientAnalysis(args.n), params)
        system = _sh.build_system(args.n, levels) if args.save_coeffs else None
    else:
        system = _sh.build_system(args.n, levels)
        params = preset_params(args.preset, len(system.levels), **_admm_overrides(args))
        f_star, coeffs = _pipe.step1(sinogram, geometry, system, params)
        if args.method == "l1-shearlet":
            image = f_star
        else:  # lti
            _require(args, "inferencer")
            mask = _classify(args.rule, system, half_angle, geometry)
            inferencer = _pipe.ExternalInferencer(
                args.inferencer, exchange_dir=args.exchange_dir, timeout=args.timeout
            )
            inferred = _pipe.step2(coeffs, mask, inferencer, system)
            visible = _vis.mask_restrict(coeffs, mask, "visible")
            image = _pipe.step3(visible, inferred, system)
    if args.save_coeffs is not None:
        mask = _classify(args.rule, system, half_angle, geometry)
        saved = coeffs if args.method == "l1-shearlet" else _sh.forward(system, image)
        _tio.write_coeffs(saved, tuple(_pipe.records_for(system, mask)), args.save_coeffs)
    if args.clip:
        image = np.maximum(image, 0.0)
    _tio.write_image(image, args.out)
    print(f"reconstruct: {args.method} -> {args.n}x{args.n} image ({args.out})")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    _require(args, "n")
    half_angle = _half_angle(args.half_angle)
    levels = _parse_levels(args.levels) if args.levels else None
    system = _sh.build_system(args.n, levels)
    geometry = default_geometry(args.n, half_angle, n_angles=args.n_angles)
    mask = _classify(args.rule, system, half_angle, geometry)
    lines = ["position,scale,shear,cone,orientation_deg,visible"]
    for pos, band in enumerate(system.index):
        theta = (
            ""
            if band.is_lowpass
            else f"{math.degrees(_sh.subband_orientation(system, band)):.6f}"
        )
        lines.append(
            f"{pos},{band.scale},{band.shear},{band.cone},{theta},"
            f"{int(mask.flags[pos])}"
        )
    table = "\n".join(lines) + "\n"
    if args.out is not None:
        Path(args.out).write_text(table)
    else:
        sys.stdout.write(table)
    print(
        f"classify-visibility: {mask.n_visible}/{system.n_subbands} visible "
        f"(rule={args.rule}, half-angle={args.half_angle:g} deg)"
    )
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    levels = _parse_levels(args.levels) if args.levels else None
    study = _pipe.oracle_experiment(
        n=args.n,
        half_angle=_half_angle(args.half_angle),
        radius_frac=args.radius_frac,
        noise_sigma_rel=args.noise,
        noise_seed=args.noise_seed,
        preset=args.preset,
        levels=levels,
    )
    if args.save_images is not None:
        outdir = Path(args.save_images)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, image in (
            ("truth", study.truth),
            ("fbp", study.f_fbp),
            ("l1-shearlet", study.f_star),
            ("oracle-combined", study.f_combined),
            ("oracle-combined-clip", study.f_combined_clipped),
            ("fbp-oracle-replace", study.f_fbp_replaced),
        ):
            _tio.write_image(image, outdir / f"{name}.lti")
    _emit_report(study.report(), args.csv)
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    _require(args, "truth", "recon")
    truth = _read_kind(args.truth, _tio.KIND_IMAGE).data.astype(np.float64)
    report = _metrics.MetricReport()
    for path in args.recon:
        recon = _read_kind(path, _tio.KIND_IMAGE).data.astype(np.float64)
        report.add(_metrics.evaluate(Path(path).stem, recon, truth))
    _emit_report(report, args.csv)
    return 0


def _cmd_mosaic(args: argparse.Namespace) -> int:
    _require(args, "infile", "out")
    tensor = _read_kind(args.infile, _tio.KIND_COEFFS)
    coeffs = tensor.data.astype(np.float64)
    if coeffs.shape[0] != coeffs.shape[1]:
        raise CliError(f"{args.infile}: coefficient grids must be square")
    levels = _levels_from_records(tensor.records)
    system = _sh.build_system(coeffs.shape[0], levels)
    mosaic = _pipe.subband_mosaic(coeffs, system)
    n = system.n
    if args.cols is not None and args.cols < 1:
        raise CliError("--cols must be a positive integer")
    cols = args.cols if args.cols is not None else int(math.ceil(math.sqrt(len(mosaic))))
    rows = int(math.ceil(len(mosaic) / cols))
    montage = np.zeros((rows * n, cols * n))
    for i, (_, layer) in enumerate(mosaic):
        r, c = divmod(i, cols)
        montage[r * n : (r + 1) * n, c * n : (c + 1) * n] = layer
    _tio.write_image(montage, args.out)
    angles = ", ".join(f"{math.degrees(theta):.2f}" for theta, _ in mosaic)
    print(
        f"export-mosaic: {len(mosaic)} orientation tiles ({rows}x{cols} grid) "
        f"-> {args.out}\norientations (deg, row-major): {angles}"
    )
    return 0


def _cmd_transform(args: argparse.Namespace) -> int:
    _require(args, "infile", "out")
    half_angle = _half_angle(args.half_angle)
    if args.adjoint:
        tensor = _read_kind(args.infile, _tio.KIND_COEFFS)
        coeffs = tensor.data.astype(np.float64)
        if coeffs.shape[0] != coeffs.shape[1]:
            raise CliError(f"{args.infile}: coefficient grids must be square")
        system = _sh.build_system(coeffs.shape[0], _levels_from_records(tensor.records))
        _tio.write_image(_sh.adjoint(system, coeffs), args.out)
        print(f"transform: adjoint -> {system.n}x{system.n} image ({args.out})")
        return 0
    image = _read_kind(args.infile, _tio.KIND_IMAGE).data.astype(np.float64)
    if image.shape[0] != image.shape[1]:
        raise CliError(f"{args.infile}: image must be square")
    levels = _parse_levels(args.levels) if args.levels else None
    system = _sh.build_system(image.shape[0], levels)
    mask = _classify(args.rule, system, half_angle)
    coeffs = _sh.forward(system, image)
    _tio.write_coeffs(coeffs, tuple(_pipe.records_for(system, mask)), args.out)
    print(
        f"transform: analysis -> {system.n_subbands} subbands at "
        f"{system.n}x{system.n} ({args.out})"
    )
    return 0


# ---------------------------------------------------------------- assembly


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value file supplying option defaults")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="lti",
        description="Limited-angle tomography: simulate, reconstruct, analyze.",
        allow_abbrev=False,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="subcommand")
    registry: dict[str, argparse.ArgumentParser] = {}

    def register(name: str, func, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(
            name, help=help_text, allow_abbrev=False, description=help_text
        )
        sub.set_defaults(func=func)
        _add_common(sub)
        registry[name] = sub
        return sub

    sim = register("simulate", _cmd_simulate, "Project a phantom to a sinogram file.")
    sim.add_argument("--phantom", choices=("circle", "ellipses"), default="circle")
    sim.add_argument("--image", help="project this image file instead of a phantom")
    sim.add_argument("--n", type=int, default=128, help="grid size (built-in phantoms)")
    sim.add_argument("--radius-frac", type=float, default=0.3)
    sim.add_argument("--value", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0, help="ellipse draw seed")
    sim.add_argument("--half-angle", type=float, default=50.0, help="degrees")
    sim.add_argument("--n-angles", type=int, default=None)
    sim.add_argument("--noise", type=float, default=0.01, help="relative noise level")
    sim.add_argument("--noise-seed", type=int, default=None)
    sim.add_argument("--oversample", type=int, default=2)
    sim.add_argument("--out", help="sinogram file to write")
    sim.add_argument("--save-phantom", help="also write the rasterized phantom")

    rec = register(
        "reconstruct", _cmd_reconstruct, "Reconstruct an image from a sinogram file."
    )
    rec.add_argument("--in", dest="infile", help="sinogram file")
    rec.add_argument("--out", help="image file to write")
    rec.add_argument("--n", type=int, help="reconstruction grid size")
    rec.add_argument("--half-angle", type=float, default=50.0, help="degrees")
    rec.add_argument("--det-spacing", type=float, default=1.0)
    rec.add_argument("--method", choices=_pipe.KNOWN_METHODS, default="l1-shearlet")
    rec.add_argument("--preset", choices=PRESET_NAMES, default="ellipses50")
    rec.add_argument("--levels", help="comma-separated shear levels per scale")
    rec.add_argument("--iterations", type=int, default=None)
    rec.add_argument("--rho0", type=float, default=None)
    rec.add_argument("--rho1", type=float, default=None)
    rec.add_argument("--cg-tol", type=float, default=None)
    rec.add_argument("--cg-max-iter", type=int, default=None)
    rec.add_argument("--tv-weight", type=float, default=0.02)
    rec.add_argument("--filter", choices=FilterKind.ALL, default=FilterKind.RAM_LAK)
    rec.add_argument("--rule", choices=RULES, default=_vis.METHOD_WEDGE)
    rec.add_argument("--inferencer", help="command with {in} and {out} placeholders")
    rec.add_argument("--timeout", type=float, default=_pipe.DEFAULT_TIMEOUT)
    rec.add_argument("--exchange-dir", default=None)
    rec.add_argument("--save-coeffs", help="also write the analysis coefficients")
    rec.add_argument("--clip", action="store_true", help="clip output to nonnegative")

    cls = register(
        "classify-visibility",
        _cmd_classify,
        "Tabulate the visible/invisible flag of every subband.",
    )
    cls.add_argument("--n", type=int)
    cls.add_argument("--half-angle", type=float, default=50.0, help="degrees")
    cls.add_argument("--rule", choices=RULES, default=_vis.METHOD_WEDGE)
    cls.add_argument("--levels", help="comma-separated shear levels per scale")
    cls.add_argument("--n-angles", type=int, default=None)
    cls.add_argument("--out", help="CSV file (default: stdout)")

    orc = register(
        "oracle-experiment",
        _cmd_oracle,
        "Swap ground-truth invisible coefficients into a circle reconstruction.",
    )
    orc.add_argument("--n", type=int, default=256)
    orc.add_argument("--half-angle", type=float, default=50.0, help="degrees")
    orc.add_argument("--radius-frac", type=float, default=0.3)
    orc.add_argument("--noise", type=float, default=0.01)
    orc.add_argument("--noise-seed", type=int, default=0)
    orc.add_argument("--preset", choices=PRESET_NAMES, default="ellipses50")
    orc.add_argument("--levels", help="comma-separated shear levels per scale")
    orc.add_argument("--csv", help="also write the report as CSV")
    orc.add_argument("--save-images", help="directory for the study's images")

    met = register(
        "metrics", _cmd_metrics, "Score reconstruction files against a truth file."
    )
    met.add_argument("--truth", help="ground-truth image file")
    met.add_argument("--recon", nargs="+", help="reconstruction image files")
    met.add_argument("--csv", help="also write the report as CSV")

    mos = register(
        "export-mosaic",
        _cmd_mosaic,
        "Tile per-orientation max-projections of a coefficient file.",
    )
    mos.add_argument("--in", dest="infile", help="coefficient file")
    mos.add_argument("--out", help="montage image file to write")
    mos.add_argument("--cols", type=int, default=None, help="tiles per row")

    tra = register(
        "transform",
        _cmd_transform,
        "Apply the frame analysis (or its adjoint) to a tensor file.",
    )
    tra.add_argument("--in", dest="infile", help="image (or coefficient) file")
    tra.add_argument("--out", help="file to write")
    tra.add_argument("--adjoint", action="store_true", help="coefficients to image")
    tra.add_argument("--levels", help="comma-separated shear levels per scale")
    tra.add_argument("--half-angle", type=float, default=50.0, help="degrees")
    tra.add_argument("--rule", choices=RULES, default=_vis.METHOD_WEDGE)

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.config is not None:
            _merge_config(args, registry[args.command], argv)
        return args.func(args)
    except (ValueError, OSError, _pipe.InferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
