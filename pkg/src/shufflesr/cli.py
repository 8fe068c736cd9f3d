"""Command-line surface.

Subcommands: count, sr, degrade, eval, train, gradcheck. Exit codes are a
stable contract: 0 success, 2 usage error, 3 weights/format parse error,
4 image I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import complexity, metrics, ops, pngio, train, weights
from .errors import ConfigError, ShapeError
from .model import FUSIONS, VARIANTS, ModelConfig, forward

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_IMAGE = 4


class UsageError(Exception):
    pass


class ConfigParseError(Exception):
    pass


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"bad size {text!r}, expected HxW like 320x180")
    try:
        h, w = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"bad size {text!r}, expected integers") from None
    if h < 1 or w < 1:
        raise UsageError(f"size {text!r} must be positive")
    return h, w


# x2 -> 640x360, x3 -> 427x240 (width rounded up), x4 -> 320x180; these are
# the LR grids whose outputs land on a 1280x720 frame
_DEFAULT_LR = {2: (360, 640), 3: (240, 427), 4: (180, 320)}


def _model_config(args) -> ModelConfig:
    try:
        return ModelConfig(channels=args.channels, dw_kernel=args.kernel,
                           n_fmb=args.fmb, scale=args.scale,
                           expansion_extra=args.expansion,
                           variant=args.variant,
                           fusion=args.fusion)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_count(args) -> int:
    cfg = _model_config(args)
    if args.lr_size:
        lr_h, lr_w = _parse_size(args.lr_size)
    else:
        lr_h, lr_w = _DEFAULT_LR[cfg.scale]
    rep = complexity.report(cfg, lr_h, lr_w)
    if args.records:
        print(complexity.format_records(rep))
    else:
        print(complexity.format_table(rep))
    return EXIT_OK


def _cmd_sr(args) -> int:
    tree, cfg = weights.load(args.weights)
    img = pngio.read_png(args.input)
    out = forward(tree, cfg, img)
    pngio.write_png(out, args.output)
    return EXIT_OK


def _cmd_degrade(args) -> int:
    if args.scale < 2:
        raise UsageError(f"scale must be >= 2, got {args.scale}")
    img = pngio.read_png(args.input)
    h = (img.shape[2] // args.scale) * args.scale
    w = (img.shape[3] // args.scale) * args.scale
    if h == 0 or w == 0:
        raise UsageError(f"image {img.shape[2]}x{img.shape[3]} smaller than scale")
    lr = ops.bicubic_resize(img[:, :, :h, :w], 1.0 / args.scale)
    pngio.write_png(lr, args.output)
    return EXIT_OK


def _paired_stems(lr_dir: Path, hr_dir: Path):
    lr_files = {p.stem: p for p in sorted(lr_dir.glob("*.png"))}
    hr_files = {p.stem: p for p in sorted(hr_dir.glob("*.png"))}
    pairs = [(s, lr_files[s], hr_files[s]) for s in sorted(lr_files) if s in hr_files]
    unpaired = sorted(set(lr_files) ^ set(hr_files))
    return pairs, unpaired


def _cmd_eval(args) -> int:
    tree, cfg = weights.load(args.weights)
    scale = args.scale if args.scale else cfg.scale
    if scale != cfg.scale:
        raise UsageError(f"--scale {scale} does not match weights scale {cfg.scale}")
    pairs, unpaired = _paired_stems(Path(args.lr_dir), Path(args.hr_dir))
    for stem in unpaired:
        print(f"warning: {stem} has no counterpart, skipped", file=sys.stderr)
    if not pairs:
        raise UsageError("no paired images between the two directories")
    proto = metrics.EvalProtocol(shave=scale)
    rows = []
    for stem, lr_path, hr_path in pairs:
        try:
            lr = pngio.read_png(lr_path)
            hr = pngio.read_png(hr_path)
        except pngio.ImageIOError as exc:
            print(f"warning: {exc}, skipped", file=sys.stderr)
            continue
        sr = pngio.quantize(forward(tree, cfg, lr))
        if sr.shape != hr.shape:
            print(f"warning: {stem}: output {sr.shape} != reference {hr.shape}, "
                  f"skipped", file=sys.stderr)
            continue
        y_sr = metrics.rgb_to_y(sr)
        y_hr = metrics.rgb_to_y(hr)
        rows.append((stem, metrics.psnr(y_sr, y_hr, proto),
                     metrics.ssim(y_sr, y_hr, proto)))
    if not rows:
        raise UsageError("no image pair could be evaluated")
    print(f"{'name':<24} {'psnr_db':>10} {'ssim':>8}")
    for stem, p, s in rows:
        print(f"{stem:<24} {p:>10.4f} {s:>8.4f}")
    mean_p = sum(r[1] for r in rows) / len(rows)
    mean_s = sum(r[2] for r in rows) / len(rows)
    print(f"{'mean':<24} {mean_p:>10.4f} {mean_s:>8.4f}")
    return EXIT_OK


_MODEL_KEYS = {
    "channels": int, "kernel": int, "fmb": int, "scale": int,
    "expansion": int, "variant": str, "fusion": str,
}
_TRAIN_KEYS = {
    "lr": float, "batch": int, "patch": int, "iters": int,
    "lambda": float, "seed": int, "checkpoint_every": int,
}


def parse_config_file(path) -> tuple[dict, dict]:
    """Flat `key: value` text, one pair per line, # starts a comment."""
    model_kv: dict = {}
    train_kv: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ConfigParseError(
                    f"{path}:{lineno}: expected 'key: value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split(":", 1))
            try:
                if key in _MODEL_KEYS:
                    model_kv[key] = _MODEL_KEYS[key](value)
                elif key in _TRAIN_KEYS:
                    train_kv[key] = _TRAIN_KEYS[key](value)
                else:
                    raise ConfigParseError(f"{path}:{lineno}: unknown key {key!r}")
            except ValueError:
                raise ConfigParseError(
                    f"{path}:{lineno}: bad value {value!r} for {key!r}") from None
    return model_kv, train_kv


def _cmd_train(args) -> int:
    model_kv, train_kv = parse_config_file(args.config)
    try:
        mcfg = ModelConfig(
            channels=model_kv.get("channels", 16),
            dw_kernel=model_kv.get("kernel", 3),
            n_fmb=model_kv.get("fmb", 1),
            scale=model_kv.get("scale", 2),
            expansion_extra=model_kv.get("expansion", 16),
            variant=model_kv.get("variant", "full"),
            fusion=model_kv.get("fusion"))
        tcfg = train.TrainConfig(
            lr=train_kv.get("lr", 5e-4),
            batch=train_kv.get("batch", 8),
            patch=train_kv.get("patch", 32),
            iters=train_kv.get("iters", 300),
            lam=train_kv.get("lambda", 0.1),
            seed=train_kv.get("seed", 0),
            scale=model_kv.get("scale", 2))
    except ConfigError as exc:
        raise ConfigParseError(f"{args.config}: {exc}") from exc
    data_dir = Path(args.data_dir)
    hr_images = []
    for path in sorted(data_dir.glob("*.png")):
        hr_images.append(pngio.read_png(path)[0])
    if not hr_images:
        raise UsageError(f"no PNG images found in {data_dir}")
    dataset = train.make_dataset(hr_images, mcfg.scale)
    tree, history = train.train_loop(
        mcfg, tcfg, dataset,
        checkpoint_every=train_kv.get("checkpoint_every", 0),
        checkpoint_path=args.out)
    weights.save(tree, mcfg, args.out)
    log_path = args.log if args.log else str(args.out) + ".loss.txt"
    with open(log_path, "w", encoding="utf-8") as fh:
        for step, loss in enumerate(history, start=1):
            fh.write(f"{step}\t{loss:.8f}\n")
    final = history[-1] if history else math.nan
    print(f"trained {tcfg.iters} steps, final loss {final:.6f}, "
          f"weights -> {args.out}, log -> {log_path}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    try:
        cfg = ModelConfig(channels=args.channels, dw_kernel=3, n_fmb=args.fmb,
                          scale=2, variant="full")
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    err = train.grad_check(cfg)
    print(f"max relative error: {err:.3e}")
    return EXIT_OK if err < 1e-4 else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shufflesr",
        description="Lightweight mixer super-resolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="print per-layer parameter and MAC counts")
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--kernel", type=int, default=7)
    p.add_argument("--fmb", type=int, default=5)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--fusion", choices=FUSIONS, default=None)
    p.add_argument("--expansion", type=int, default=16)
    p.add_argument("--lr-size", default=None, metavar="HxW")
    p.add_argument("--records", action="store_true",
                   help="machine-readable one-record-per-layer output")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("sr", help="super-resolve a PNG with a weights file")
    p.add_argument("--weights", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_sr)

    p = sub.add_parser("degrade", help="antialiased cubic downscale of a PNG")
    p.add_argument("--input", required=True)
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("eval", help="PSNR/SSIM of model outputs against references")
    p.add_argument("--weights", required=True)
    p.add_argument("--lr-dir", required=True)
    p.add_argument("--hr-dir", required=True)
    p.add_argument("--scale", type=int, default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("train", help="run the training loop on a folder of HR PNGs")
    p.add_argument("--config", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("gradcheck", help="finite-difference check of the gradients")
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--fmb", type=int, default=1)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (weights.WeightsFormatError, ConfigParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except pngio.ImageIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMAGE
    except (ConfigError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
