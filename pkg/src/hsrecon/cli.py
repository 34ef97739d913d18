"""Command-line surface: simulate, reconstruct, evaluate, preview, diag."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import color, fileio, imaging, metrics, patches, solver
from .errors import HsreconError, UsageError
from .tensors import hosvd


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"dims must be I,J,L, got {text!r}")
    try:
        i, j, l = (int(p) for p in parts)
    except ValueError:
        raise UsageError(f"dims must be integers, got {text!r}") from None
    if min(i, j, l) < 1:
        raise UsageError(f"dims must be positive, got {text!r}")
    return i, j, l


def _parse_anchor(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"anchor must be row,col, got {text!r}")
    return int(parts[0]), int(parts[1])


def _cmd_simulate(args) -> int:
    cube = fileio.read_cube(args.cube)
    rows, cols, bands = cube.shape
    mask = imaging.generate_mask(rows, cols, args.p, args.seed)
    sysmod = imaging.SystemModel.default(mask, bands, mode=args.mode)
    meas = imaging.forward(cube, sysmod)
    cassi, pan = meas.cassi, meas.pan
    if args.noise_sigma > 0.0:
        rng = np.random.default_rng(args.seed + 1)
        cassi = cassi + args.noise_sigma * rng.standard_normal(cassi.shape)
        if pan is not None:
            pan = pan + args.noise_sigma * rng.standard_normal(pan.shape)
    fileio.write_plane(cassi, args.out_meas)
    fileio.write_plane(mask, args.out_mask)
    if args.mode == imaging.DCCHI:
        if args.out_pan is None:
            raise UsageError("dcchi mode requires --out-pan")
        fileio.write_plane(pan, args.out_pan)
    return 0


def _cmd_reconstruct(args) -> int:
    dims = _parse_dims(args.dims)
    mask = fileio.read_mask(args.mask)
    cassi = fileio.read_plane(args.meas)
    pan = fileio.read_plane(args.pan) if args.pan else None
    mode = imaging.DCCHI if pan is not None else imaging.CASSI
    sysmod = imaging.SystemModel.default(mask, dims[2], mode=mode)
    params = solver.SolverParams(
        tau=args.tau,
        c=args.c,
        s=args.s,
        step=args.step,
        k=args.k,
        window=args.window,
        max_iter=args.iters,
        rematch_every=args.rematch_every,
        weight_mode=args.weight_mode,
    )
    log = open(args.log, "w") if args.log else None
    try:
        if log:
            log.write("iter,residual,seconds\n")

        def progress(it: int, residual: float, seconds: float) -> None:
            if log:
                log.write(f"{it},{residual:.10e},{seconds:.3f}\n")

        y = imaging.Measurement(cassi=cassi, pan=pan)
        recon = solver.reconstruct(y, sysmod, params, progress=progress)
    finally:
        if log:
            log.close()
    fileio.write_cube(recon, args.out)
    return 0


def _cmd_evaluate(args) -> int:
    ref = fileio.read_cube(args.ref)
    est = fileio.read_cube(args.est)
    report = metrics.evaluate(ref, est)
    band_cols = ",".join(f"band{i}_psnr_db" for i in range(len(report.band_psnr)))
    band_vals = ",".join(f"{v:.6f}" for v in report.band_psnr)
    Path(args.out).write_text(
        f"psnr_db,ssim,ergas,rmse,{band_cols}\n{report.csv_row()},{band_vals}\n"
    )
    print(report.text())
    return 0


def _cmd_preview(args) -> int:
    cube = fileio.read_cube(args.cube)
    wavelengths = args.wl_start + args.wl_step * np.arange(cube.shape[2])
    image = color.rgb_preview(cube, wavelengths)
    color.write_ppm(image, args.out)
    return 0


def _cmd_spectrum_diag(args) -> int:
    cube = fileio.read_cube(args.cube)
    anchor = _parse_anchor(args.anchor)
    members = patches.match_blocks(cube, anchor, args.s, args.k, args.window)
    group = patches.build_group(cube, members, args.s)
    mags = np.sort(np.abs(hosvd(group.stacked).core).ravel())[::-1]
    lines = ["rank,magnitude"]
    lines += [f"{i},{m:.10e}" for i, m in enumerate(mags)]
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsrecon",
        description="Snapshot hyperspectral imaging: simulate, reconstruct, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a snapshot measurement")
    p.add_argument("--cube", required=True)
    p.add_argument("--mode", choices=[imaging.CASSI, imaging.DCCHI], default=imaging.CASSI)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--out-meas", required=True)
    p.add_argument("--out-pan")
    p.add_argument("--out-mask", required=True)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct a cube from a measurement")
    p.add_argument("--meas", required=True)
    p.add_argument("--pan")
    p.add_argument("--mask", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.0055)
    p.add_argument("--s", type=int, default=5)
    p.add_argument("--step", type=int, default=4)
    p.add_argument("--k", type=int, default=45)
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--iters", type=int, default=600)
    p.add_argument("--rematch-every", type=int, default=40)
    p.add_argument(
        "--weight-mode",
        choices=[solver.WEIGHT_MAGNITUDE, solver.WEIGHT_LITERAL],
        default=solver.WEIGHT_MAGNITUDE,
    )
    p.add_argument("--log")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate", help="quality indexes between two cubes")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("preview", help="render a cube to an RGB image")
    p.add_argument("--cube", required=True)
    p.add_argument("--wl-start", type=float, default=400.0)
    p.add_argument("--wl-step", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_preview)

    p = sub.add_parser(
        "spectrum-diag", help="sorted core magnitudes of one nonlocal group"
    )
    p.add_argument("--cube", required=True)
    p.add_argument("--anchor", required=True)
    p.add_argument("--s", type=int, default=5)
    p.add_argument("--k", type=int, default=45)
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum_diag)

    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (HsreconError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
