"""Command-line pipelines: synthesize, reconstruct, and full figure runs."""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .born_recon import reconstruct_born
from .forward import FrequencyGrid, synthesize_dataset
from .phantom import Scene, beta_at, load_scene, save_scene, standard_scenes
from .phase_recon import (
    delay_samples,
    recover_travel_times,
    reconstruct_kinematic,
    reference_amplitude,
    reference_travel_time,
)
from .postprocess import smooth_and_clip
from .radon import Image2D, SinogramSpec, radon_forward, radon_inverse, resample_to_sinogram

CROSS_SECTION = np.sqrt(2.0) / 2.0


def _resolve_scene(ref: str) -> Scene:
    catalog = standard_scenes()
    if ref in catalog:
        return catalog[ref]
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(
            f"scene {ref!r} is neither a catalog name ({', '.join(catalog)}) "
            f"nor an existing file"
        )
    return load_scene(path)


def _rasterize(scene: Scene, n: int) -> Image2D:
    """Cross-section of beta on the inscribed square at x3 = 0."""
    half = scene.domain_radius * CROSS_SECTION
    xs = np.linspace(-half, half, n)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([x1, x2, np.zeros_like(x1)], axis=-1)
    return Image2D(values=beta_at(scene, pts.reshape(-1, 3)).reshape(n, n), half_width=half)


def _write_image(image: Image2D, out_csv: Path) -> list[Path]:
    fileio.save_image_csv(image, out_csv)
    pgm = out_csv.with_suffix(".pgm")
    fileio.save_image_pgm(image, pgm)
    return [out_csv, pgm]


def _postprocess_arg(value) -> float | None:
    if value is None:
        return None
    return 0.005 if value == "" else float(value)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synthesize(args) -> int:
    scene = _resolve_scene(args.scene)
    freqs = FrequencyGrid(k_min=args.kmin, k_max=args.kmax, count=args.nk)
    data = synthesize_dataset(
        scene,
        n_boundary=args.nboundary,
        freqs=freqs,
        grid_spec=args.spacing,
        tol=args.tol,
        store_complex=args.store_complex,
        min_ppw=args.ppw,
    )
    fileio.save_dataset(data, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_reconstruct_born(args) -> int:
    data = fileio.load_dataset(args.data)
    spec = SinogramSpec(
        n_offsets=args.n_offsets,
        n_angles=args.n_angles or data.n_boundary,
        r_max=data.radius,
    )
    image = reconstruct_born(
        data, args.k, spec=spec, n=args.image_n, use_sqrt=not args.no_sqrt
    )
    radius = _postprocess_arg(args.postprocess)
    if radius is not None:
        image = smooth_and_clip(image, radius)
    for path in _write_image(image, Path(args.out)):
        print(f"wrote {path}")
    return 0


def cmd_reconstruct_phase(args) -> int:
    data = fileio.load_dataset(args.data)
    field = recover_travel_times(
        data,
        eps_reg=args.eps_reg,
        eps_thr=args.eps_thr,
        alpha_window_factor=args.alpha_window_factor,
    )
    spec = SinogramSpec(
        n_offsets=args.n_offsets,
        n_angles=args.n_angles or data.n_boundary,
        r_max=data.radius,
    )
    image = reconstruct_kinematic(field, spec=spec, n=args.image_n)
    radius = _postprocess_arg(args.postprocess)
    if radius is not None:
        image = smooth_and_clip(image, radius)
    written = _write_image(image, Path(args.out))
    if args.emit_tau:
        _write_tau_csv(field, Path(args.emit_tau))
        written.append(Path(args.emit_tau))
    if args.emit_validation:
        _write_validation_csv(data, field, Path(args.emit_validation))
        written.append(Path(args.emit_validation))
    for path in written:
        print(f"wrote {path}")
    return 0


def _write_tau_csv(field, path: Path) -> None:
    dist = field.pair_distances()
    samples = delay_samples(field)
    n = field.angles.size
    src, rec = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    off = src != rec
    src, rec = src[off], rec[off]
    lines = ["# columns: src,rec,r,theta,tau,dist,delay,forward"]
    for row in range(len(src)):
        i, j = int(src[row]), int(rec[row])
        r, theta, delay = samples[row]
        lines.append(
            f"{i},{j},{r:.17g},{theta:.17g},{field.tau[i, j]:.17g},"
            f"{dist[i, j]:.17g},{delay:.17g},{int(field.forward_mask[i, j])}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_validation_csv(data, field, path: Path) -> None:
    """Per-pair fitted vs reference travel time and amplitude."""
    if data.scattered is None:
        raise ValueError(
            "validation output needs complex scattered data "
            "(synthesize with --store-complex)"
        )
    k = data.freqs.samples
    dist = data.pair_distances()
    lines = ["# columns: src,rec,dist,tau_fit,tau_ref,amp_fit,amp_ref"]
    for i, j in data.pairs():
        u0 = np.exp(-1j * k * dist[i, j]) / (4 * np.pi * dist[i, j])
        u_total = data.scattered[i, j] + u0
        tau_ref = dist[i, j] + 0.0
        try:
            tau_ref = reference_travel_time(u_total, k)
        except ValueError:
            pass
        amp_ref = reference_amplitude(u_total, k)
        lines.append(
            f"{i},{j},{dist[i, j]:.17g},{field.tau[i, j]:.17g},{tau_ref:.17g},"
            f"{field.amplitude[i, j]:.17g},{amp_ref:.17g}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_radon(args) -> int:
    if args.scene:
        image = _rasterize(_resolve_scene(args.scene), args.image_n)
        r_max = args.r_max or image.half_width / CROSS_SECTION
    else:
        image = fileio.load_image_csv(args.image)
        r_max = args.r_max or image.half_width / CROSS_SECTION
    spec = SinogramSpec(n_offsets=args.n_offsets, n_angles=args.n_angles, r_max=r_max)
    fileio.save_sinogram(radon_forward(image, spec), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_iradon(args) -> int:
    sino = fileio.load_sinogram(args.sinogram)
    if not sino.mask.all():
        spec = SinogramSpec(
            n_offsets=sino.offsets.size,
            n_angles=sino.angles.size,
            r_max=float(np.max(np.abs(sino.offsets))),
        )
        samples = []
        for ir, it in zip(*np.nonzero(sino.mask)):
            samples.append((sino.offsets[ir], sino.angles[it], sino.values[ir, it]))
        sino = resample_to_sinogram(np.asarray(samples), spec)
    image = radon_inverse(sino, args.image_n, taper=args.taper)
    for path in _write_image(image, Path(args.out)):
        print(f"wrote {path}")
    return 0


def cmd_scenes(args) -> int:
    catalog = standard_scenes()
    if args.action == "list":
        for name, scene in catalog.items():
            parts = ", ".join(
                f"r={inc.radius:g} at ({inc.center[0]:g},{inc.center[1]:g},{inc.center[2]:g})"
                f" amp={inc.amplitude:g}"
                for inc in scene.inclusions
            )
            print(f"{name}: R={scene.domain_radius:g}; {parts}")
        return 0
    if not args.name or not args.out:
        raise ValueError("scenes export needs --name and --out")
    if args.name not in catalog:
        raise FileNotFoundError(f"unknown catalog scene {args.name!r}")
    save_scene(catalog[args.name], args.out, comment=f"catalog scene {args.name}")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def _config_get(cfg, section, option, fallback):
    if not cfg.has_option(section, option):
        return fallback
    if isinstance(fallback, bool):
        return cfg.getboolean(section, option)
    if isinstance(fallback, int):
        return cfg.getint(section, option)
    if isinstance(fallback, float):
        return cfg.getfloat(section, option)
    return cfg.get(section, option)


def cmd_run(args) -> int:
    cfg = configparser.ConfigParser()
    if not Path(args.config).exists():
        raise FileNotFoundError(f"config file {args.config!r} not found")
    cfg.read(args.config)

    scene_ref = cfg.get("scene", "name", fallback=None) or cfg.get("scene", "path")
    scene = _resolve_scene(scene_ref)
    freqs = FrequencyGrid(
        k_min=cfg.getfloat("frequencies", "kmin"),
        k_max=cfg.getfloat("frequencies", "kmax"),
        count=cfg.getint("frequencies", "count"),
    )
    n_boundary = cfg.getint("boundary", "count")
    tol = _config_get(cfg, "solver", "tol", 1e-6)
    ppw = _config_get(cfg, "solver", "ppw", 10.0)
    store_complex = _config_get(cfg, "solver", "store_complex", True)
    born_ks = [
        float(v)
        for v in _config_get(cfg, "born", "k", "").replace(",", " ").split()
    ]
    use_sqrt = _config_get(cfg, "born", "use_sqrt", True)
    eps_reg = _config_get(cfg, "phase", "eps_reg", 1e-14)
    eps_thr = _config_get(cfg, "phase", "eps_thr", 4e-4)
    window_factor = _config_get(cfg, "phase", "alpha_window_factor", 10.0)
    n_offsets = _config_get(cfg, "reconstruction", "n_offsets", 129)
    n_angles = _config_get(cfg, "reconstruction", "n_angles", 0) or n_boundary
    image_n = _config_get(cfg, "reconstruction", "image_n", 101)
    post_radius = _config_get(cfg, "reconstruction", "postprocess_radius", 0.005)
    taper = _config_get(cfg, "reconstruction", "taper", 0.0)
    out_dir = Path(_config_get(cfg, "output", "dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    spec = SinogramSpec(n_offsets=n_offsets, n_angles=n_angles, r_max=scene.domain_radius)
    manifest = {"config": str(args.config), "stages": {}, "artifacts": []}

    def record(stage: str, paths: list[Path]) -> None:
        manifest["stages"][stage] = "ok"
        manifest["artifacts"].extend(
            {"path": str(p), "stage": stage} for p in paths
        )
        _write_manifest(out_dir, manifest)

    stage = "truth"
    try:
        truth = _rasterize(scene, image_n)
        paths = _write_image(truth, out_dir / "true_image.csv")
        true_sino = radon_forward(truth, spec)
        fileio.save_sinogram(true_sino, out_dir / "true_sinogram.csv")
        record(stage, paths + [out_dir / "true_sinogram.csv"])

        stage = "synthesize"
        data = synthesize_dataset(
            scene,
            n_boundary=n_boundary,
            freqs=freqs,
            tol=tol,
            store_complex=store_complex,
            min_ppw=ppw,
        )
        fileio.save_dataset(data, out_dir / "dataset.csv")
        record(stage, [out_dir / "dataset.csv"])

        stage = "born"
        born_paths = []
        from .born_recon import born_sinogram

        for k in born_ks:
            tag = f"{k:g}".replace(".", "p")
            sino = resample_to_sinogram(born_sinogram(data, k, use_sqrt), spec)
            sino_path = out_dir / f"born_sinogram_k{tag}.csv"
            fileio.save_sinogram(sino, sino_path)
            image = radon_inverse(sino, image_n, taper=taper)
            image = smooth_and_clip(image, post_radius)
            born_paths += [sino_path] + _write_image(
                image, out_dir / f"born_image_k{tag}.csv"
            )
        record(stage, born_paths)

        stage = "phase"
        field = recover_travel_times(
            data, eps_reg=eps_reg, eps_thr=eps_thr, alpha_window_factor=window_factor
        )
        delay_sino = resample_to_sinogram(delay_samples(field), spec)
        fileio.save_sinogram(delay_sino, out_dir / "delay_sinogram.csv")
        image = reconstruct_kinematic(field, spec=spec, n=image_n, taper=taper)
        image = smooth_and_clip(image, post_radius)
        paths = [out_dir / "delay_sinogram.csv"] + _write_image(
            image, out_dir / "phase_image.csv"
        )
        _write_tau_csv(field, out_dir / "tau_pairs.csv")
        paths.append(out_dir / "tau_pairs.csv")
        if store_complex:
            _write_validation_csv(data, field, out_dir / "validation.csv")
            paths.append(out_dir / "validation.csv")
        record(stage, paths)
    except Exception as err:
        manifest["stages"][stage] = f"failed: {err}"
        _write_manifest(out_dir, manifest)
        raise
    print(f"pipeline complete; manifest at {out_dir / 'manifest.json'}")
    return 0


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_recon_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-offsets", type=int, default=129)
    p.add_argument("--n-angles", type=int, default=0, help="0 = boundary count")
    p.add_argument("--image-n", type=int, default=101)
    p.add_argument(
        "--postprocess",
        nargs="?",
        const="",
        default=None,
        metavar="RADIUS",
        help="disk-average and clip (default radius 0.005)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseless",
        description="Phaseless scattering data synthesis and reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="solve the forward model, write a dataset")
    p.add_argument("--scene", required=True, help="catalog name or scene file")
    p.add_argument("--nboundary", type=int, default=64)
    p.add_argument("--kmin", type=float, required=True)
    p.add_argument("--kmax", type=float, required=True)
    p.add_argument("--nk", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--store-complex", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--ppw", type=float, default=10.0)
    p.add_argument("--spacing", type=float, default=None, help="override voxel spacing")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("reconstruct-born", help="single-frequency Radon inversion")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-sqrt", action="store_true", help="use f instead of sqrt(f)")
    _add_recon_flags(p)
    p.set_defaults(func=cmd_reconstruct_born)

    p = sub.add_parser("reconstruct-phase", help="travel-time pipeline inversion")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eps-reg", type=float, default=1e-14)
    p.add_argument("--eps-thr", type=float, default=4e-4)
    p.add_argument("--alpha-window-factor", type=float, default=10.0)
    p.add_argument("--emit-tau", default=None, metavar="CSV")
    p.add_argument("--emit-validation", default=None, metavar="CSV")
    _add_recon_flags(p)
    p.set_defaults(func=cmd_reconstruct_phase)

    p = sub.add_parser("radon", help="forward Radon transform of an image or scene")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--image", help="image CSV")
    src.add_argument("--scene", help="catalog name or scene file to rasterize")
    p.add_argument("--image-n", type=int, default=201)
    p.add_argument("--n-offsets", type=int, default=129)
    p.add_argument("--n-angles", type=int, default=64)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_radon)

    p = sub.add_parser("iradon", help="filtered backprojection of a sinogram")
    p.add_argument("--sinogram", required=True)
    p.add_argument("--image-n", type=int, default=101)
    p.add_argument("--taper", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_iradon)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scenes", help="catalog operations")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("--name", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scenes)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
