"""``polarface`` command line: synth, preprocess, extract, train, eval, verify.

Exit codes: 0 success (``verify``: claim accepted), 1 claim rejected,
2 any error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .classifier import train, verify
from .config import CONFIG_ENV, ConfigError, build_config
from .errors import PolarFaceError
from .evaluation import eer, roc, run_protocol
from .features import extract_entry, polar_grids, variant_dim
from .fbt import fbt_forward, reconstruct_image
from .io import (
    GrayImage,
    load_pgm,
    parse_manifest,
    read_features_with_header,
    read_model,
    save_pgm,
    write_features,
    write_model,
    write_roc,
    write_summary,
)
from .preprocess import normalize
from .synthetic import PERTURBATIONS, generate_synthetic

log = logging.getLogger("polarface")

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class CommandError(Exception):
    pass


def _add_common(p, *names):
    """Attach the shared flags listed in ``names``."""
    helps = {
        "manifest": "manifest CSV: image_path,subject_id,lx,ly,rx,ry",
        "images_dir": "directory image paths are relative to (default: manifest's directory)",
        "variant": "feature variant: fbt_global, fbt_local, pft_global or pft_local",
        "features": "feature file produced by 'extract'",
        "model": "model file produced by 'train'",
        "out": "output path",
        "threshold": "acceptance threshold c; a claim is accepted when score <= c",
        "seed": "random seed",
        "jobs": "worker processes for extraction (default: all cores)",
    }
    types = {"threshold": float, "seed": int, "jobs": int}
    for name in names:
        flag = "--" + name.replace("_", "-")
        p.add_argument(flag, dest=name, type=types.get(name, str), default=None, help=helps[name])
    p.add_argument("--config", default=None,
                   help=f"key = value config file (fallback: ${CONFIG_ENV}); flags override it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarface",
        description="Polar-frequency face verification: Fourier-Bessel / polar Fourier "
        "features, dissimilarity space and pseudo-Fisher discriminants.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic gallery/probe dataset")
    _add_common(p, "out", "seed")
    p.add_argument("--subjects", type=int, default=None, help="number of subjects (default 50)")
    p.add_argument("--probes-per-subject", dest="probes_per_subject", type=int, default=None,
                   help="probe images per subject (default 2)")
    p.add_argument("--perturbation", choices=PERTURBATIONS, default=None,
                   help="probe perturbation (default none)")
    p.add_argument("--strength", type=float, default=None, help="perturbation scale (default 1)")

    p = sub.add_parser("preprocess", help="write normalised crops (and optional reconstructions)")
    _add_common(p, "manifest", "images_dir", "out")
    p.add_argument("--reconstruct", action="store_true",
                   help="also write the inverse Fourier-Bessel reconstruction of each crop")

    p = sub.add_parser("extract", help="compute feature vectors for every manifest entry")
    _add_common(p, "manifest", "images_dir", "variant", "out", "jobs")
    _add_band(p)

    p = sub.add_parser("train", help="fit per-subject pseudo-Fisher discriminants")
    _add_common(p, "features", "out")

    p = sub.add_parser("eval", help="run the verification protocol; write ROC and EER")
    _add_common(p, "model", "features", "out")

    p = sub.add_parser("verify", help="accept (exit 0) or reject (exit 1) one identity claim")
    _add_common(p, "model", "features", "threshold")
    p.add_argument("--probe", required=True, help="image id of the probe in --features")
    p.add_argument("--claim", required=True, help="claimed subject id")
    return parser


def _add_band(p):
    p.add_argument("--orders", type=int, default=None, help="highest Bessel order N (default 30)")
    p.add_argument("--roots", type=int, default=None, help="roots per order I (default 6)")
    p.add_argument("--angular-step-deg", dest="angular_step_deg", type=float, default=None,
                   help="angular sampling in degrees (default 3)")
    p.add_argument("--radial-step", dest="radial_step", type=float, default=None,
                   help="radial sampling in pixels (default 1)")


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) in (None, ""):
            raise CommandError(f"--{name.replace('_', '-')} is required")


def _images_dir(cfg):
    if cfg.images_dir:
        return cfg.images_dir
    return os.path.dirname(os.path.abspath(cfg.manifest))


# -- subcommands -------------------------------------------------------------

def cmd_synth(cfg) -> int:
    _require(cfg, "out")
    ds = generate_synthetic(cfg.subjects, cfg.probes_per_subject, cfg.perturbation,
                            cfg.seed, cfg.strength, cfg.layout())
    ds.write(cfg.out)
    print(f"wrote {len(ds.gallery)} gallery and {len(ds.probes)} probe images to {cfg.out}")
    return EXIT_OK


def _rescale(pixels, mask):
    valid = pixels[mask] if mask is not None else pixels
    lo, hi = float(valid.min()), float(valid.max())
    out = (pixels - lo) / (hi - lo) if hi > lo else np.zeros_like(pixels)
    return np.where(mask, out, 0.0) if mask is not None else out


def cmd_preprocess(cfg) -> int:
    _require(cfg, "manifest", "out")
    fcfg = cfg.feature_config()
    os.makedirs(cfg.out, exist_ok=True)
    root = _images_dir(cfg)
    for entry in parse_manifest(cfg.manifest):
        image = load_pgm(os.path.join(root, entry.image_path))
        norm = normalize(image, (entry.left_eye, entry.right_eye), fcfg.layout)
        stem = os.path.splitext(entry.image_path.replace("/", "_"))[0]
        save_pgm(GrayImage(_rescale(norm.pixels, norm.mask)), os.path.join(cfg.out, stem + "_norm.pgm"))
        if getattr(cfg, "reconstruct", False):
            grid = polar_grids(norm, "fbt_global", fcfg)[0]
            coeffs = fbt_forward(grid, None, fcfg.orders, fcfg.roots)
            recon = reconstruct_image(coeffs, norm.pixels.shape, grid.center)
            save_pgm(GrayImage(_rescale(recon, None)), os.path.join(cfg.out, stem + "_fbt.pgm"))
    return EXIT_OK


def _extract_one(args):
    entry, root, variant, fcfg = args
    try:
        return extract_entry(entry, root, variant, fcfg), None
    except (OSError, PolarFaceError, ValueError) as exc:
        return None, f"{entry.image_path}: {exc}"


def cmd_extract(cfg) -> int:
    _require(cfg, "manifest", "out")
    fcfg = cfg.feature_config()
    entries = parse_manifest(cfg.manifest)
    root = _images_dir(cfg)
    jobs = [(e, root, cfg.variant, fcfg) for e in entries]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_extract_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.jobs))))
    else:
        results = [_extract_one(j) for j in jobs]
    records, failures = [], []
    for k, (rec, err) in enumerate(results, start=1):
        if err:
            failures.append(err)
            print(f"error: {err}", file=sys.stderr)
        else:
            records.append(rec)
        log.info("extracted %d/%d", k, len(results))
    write_features(records, cfg.out, variant=cfg.variant, dim=variant_dim(cfg.variant, fcfg))
    print(f"wrote {len(records)} {cfg.variant} records to {cfg.out}")
    if failures:
        print(f"{len(failures)} of {len(entries)} images failed", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def _load_features(path):
    try:
        return read_features_with_header(path)
    except FileNotFoundError:
        raise CommandError(f"feature file not found: {path}") from None


def _matrix(records, dim):
    return np.array([r.vector for r in records], dtype=float).reshape(len(records), dim)


def cmd_train(cfg) -> int:
    _require(cfg, "features", "out")
    variant, dim, records = _load_features(cfg.features)
    if len(records) < 2:
        raise CommandError("training needs at least two feature records")
    model = train(_matrix(records, dim), [r.subject_id for r in records],
                  [r.image_id for r in records], variant)
    write_model(model, cfg.out)
    print(f"trained {len(model.subjects)} discriminants on {len(records)} images -> {cfg.out}")
    return EXIT_OK


def _load_consistent(cfg):
    try:
        model = read_model(cfg.model)
    except FileNotFoundError:
        raise CommandError(f"model file not found: {cfg.model}") from None
    variant, dim, records = _load_features(cfg.features)
    if model.variant is not None and model.variant != variant:
        raise CommandError(
            f"variant mismatch: model trained on {model.variant}, features are {variant}"
        )
    if dim != model.dim:
        raise CommandError(f"dimension mismatch: model expects {model.dim}, features have {dim}")
    return model, records


def cmd_eval(cfg) -> int:
    _require(cfg, "model", "features", "out")
    model, records = _load_consistent(cfg)
    if not records:
        raise CommandError("no probe records to evaluate")
    trials = run_protocol(model, [(r.vector, r.subject_id) for r in records])
    if trials.skipped:
        print(f"warning: {trials.skipped} probes skipped (subject not enrolled)", file=sys.stderr)
    curve = roc(trials)
    value = eer(curve)
    os.makedirs(cfg.out, exist_ok=True)
    write_roc(curve, os.path.join(cfg.out, "roc.csv"))
    write_summary(
        {
            "eer": value,
            "genuine_trials": curve.genuine_count,
            "impostor_trials": curve.impostor_count,
            "skipped_probes": trials.skipped,
            "variant": model.variant,
        },
        os.path.join(cfg.out, "summary.json"),
    )
    print(f"EER {value:.6f} ({curve.genuine_count} genuine, {curve.impostor_count} impostor trials)")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    _require(cfg, "model", "features", "threshold")
    model, records = _load_consistent(cfg)
    by_id = {r.image_id: r for r in records}
    if cfg.probe not in by_id:
        raise CommandError(f"probe {cfg.probe!r} not found in {cfg.features}")
    accepted, s = verify(model, by_id[cfg.probe].vector, cfg.claim, cfg.threshold)
    print(f"{'accept' if accepted else 'reject'} claim {cfg.claim} for {cfg.probe}: "
          f"score {s:.6g} (threshold {cfg.threshold:g})")
    return EXIT_OK if accepted else EXIT_REJECT


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    flags = vars(args).copy()
    command = flags.pop("command")
    config_path = flags.pop("config")
    try:
        cfg = build_config(flags, config_path)
        # subcommand-only flags that are not part of RunConfig
        for extra in ("probe", "claim", "reconstruct"):
            if extra in flags:
                setattr(cfg, extra, flags[extra])
        return COMMANDS[command](cfg)
    except (CommandError, ConfigError, PolarFaceError, OSError, ValueError) as exc:
        print(f"polarface {command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
