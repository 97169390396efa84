"""Command line entry point: synth, patterns, estimate, eval, eval-loss, suite.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import synthgen
from .estimator import estimate, preset
from .lightfield import LightFieldError, load_lightfield, save_lightfield
from .metrics import BADPIX_EPS, MetricsError, default_border, evaluate, render_maps
from .objective import GAMMA, LAMBDA1, LAMBDA2, total_objective
from .patterns import PatternError, generate_pattern_set, mask_to_str, pattern_table
from .pfm import read_pfm, write_pfm
from .photometric import TAU
from .suite import run_suite, summary_table

log = logging.getLogger("opalfield")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ACCEPTANCE = 4


class ConfigError(ValueError):
    pass


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- subcommands --------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = synthgen.suite_scene(args.scene, n=args.n, size=args.size)
    lf, gt = synthgen.render_scene(spec)
    out = Path(args.output)
    save_lightfield(lf, out, extra_meta={"disparity_range": [-args.dmax, args.dmax], "scene": args.scene})
    write_pfm(gt.disparity, out / "gt.pfm")
    occ_dir = out / "occlusion"
    occ_dir.mkdir(exist_ok=True)
    n = lf.angular_n
    for row in range(n):
        for col in range(n):
            mask = (gt.occlusion[row, col].astype(np.uint8) * 255)
            Image.fromarray(mask).save(occ_dir / f"occ_{row}_{col}.png")
    summary = {"scene": args.scene, "output": str(out), "angular_n": n, "height": lf.height,
               "width": lf.width, "occluded_pixels": int(gt.occlusion.any(axis=(0, 1)).sum())}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_patterns(args) -> int:
    print(pattern_table(args.n, args.beta))
    if args.json:
        ps = generate_pattern_set(args.n, args.beta)
        _write_json(args.json, {
            "native_n": ps.native_n, "beta": ps.beta, "m": ps.m,
            "patterns": [mask_to_str(m) for m in ps.masks],
            "upsampled": [mask_to_str(m) for m in ps.upsampled],
        })
    return EXIT_OK


def sweep_config_from_args(args):
    overrides = {
        "beta": args.beta, "tau": args.tau, "d_max": args.dmax, "num_candidates": args.candidates,
        "threads": args.threads, "aggregation_radius": args.radius,
        "lambda1": args.lambda1, "lambda2": args.lambda2, "gamma": args.gamma,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.no_refine:
        overrides["refine"] = False
    if args.regression is not None:
        overrides["regression"] = args.regression
    if args.temperature is not None:
        overrides["soft_temperature"] = args.temperature
    try:
        return preset(args.preset, **overrides)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


def cmd_estimate(args) -> int:
    cfg = sweep_config_from_args(args)
    log.info("resolved sweep config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
    lf = load_lightfield(args.input)
    try:
        generate_pattern_set(lf.angular_n, cfg.beta)
    except PatternError as e:
        raise ConfigError(str(e)) from None
    res = estimate(lf, cfg)
    write_pfm(res.disparity, args.output)
    if args.dump_selection and res.selection is not None:
        # raw pattern indices, one block per direction, side by side
        tiles = np.concatenate(list(res.selection.astype(np.uint8)), axis=1)
        Image.fromarray(tiles).save(args.dump_selection)
    summary = {"output": str(args.output), "losses": res.losses.to_dict(), "stats": res.stats}
    if args.json:
        _write_json(args.json, summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    est = read_pfm(args.est)
    gt = read_pfm(args.gt)
    eps = tuple(args.eps) if args.eps else (BADPIX_EPS,)
    mask = None
    if args.mask:
        with Image.open(args.mask) as im:
            mask = np.asarray(im.convert("L")) > 0
    border = default_border() if args.border is None else args.border
    rep = evaluate(est, gt, border=border, eps=eps, mask=mask, mask_path=args.mask)
    if args.json:
        _write_json(args.json, rep.to_dict())
    if args.render_dir:
        render_maps(est, args.render_dir, gt=gt, eps=eps[0])
    bp = "  ".join(f"BadPix({k})={v:.3f}%" for k, v in rep.badpix.items())
    print(f"MSEx100={rep.mse_x100:.4f}  {bp}  pixels={rep.evaluated_pixels}")
    print(json.dumps(rep.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_eval_loss(args) -> int:
    lf = load_lightfield(args.input)
    raw = read_pfm(args.disp)
    final = read_pfm(args.final) if args.final else None
    log.info("resolved loss config: %s", json.dumps(
        {"lambda1": args.lambda1, "lambda2": args.lambda2, "gamma": args.gamma, "tau": args.tau,
         "beta": args.beta}, sort_keys=True))
    try:
        br = total_objective(lf, raw, final, lambda1=args.lambda1, lambda2=args.lambda2,
                             gamma=args.gamma, tau=args.tau, beta=args.beta)
    except PatternError as e:
        raise ConfigError(str(e)) from None
    except ValueError as e:
        if isinstance(e, LightFieldError):
            raise
        raise ConfigError(str(e)) from None
    print(json.dumps(br.to_dict(), sort_keys=True))
    if args.json:
        _write_json(args.json, br.to_dict())
    return EXIT_OK


def cmd_suite(args) -> int:
    scenes = args.scenes.split(",") if args.scenes else None
    if scenes:
        known = {k for k, _ in synthgen.standard_suite(args.n, args.size)}
        unknown = set(scenes) - known
        if unknown:
            raise ConfigError(f"unknown scenes: {sorted(unknown)}")
    report = run_suite(args.output, n=args.n, size=args.size, scenes=scenes, threads=args.threads,
                       render=not args.no_images)
    print(summary_table(report))
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


# --- parser -------------------------------------------------------------------

def _add_sweep_options(p) -> None:
    p.add_argument("--preset", choices=["full", "fast"], default="full")
    p.add_argument("--beta", type=int, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--dmax", type=float, default=None)
    p.add_argument("--candidates", type=int, default=None)
    p.add_argument("--radius", type=int, default=None, help="cost aggregation radius")
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--lambda2", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--no-refine", action="store_true", default=False)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--soft", dest="regression", action="store_const", const="soft")
    g.add_argument("--hard", dest="regression", action="store_const", const="hard")
    p.set_defaults(regression=None)
    p.add_argument("--temperature", type=float, default=None, help="soft regression temperature")
    p.add_argument("--dump-selection", default=None, metavar="PNG")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--json", default=None, metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opalfield", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--config", default=None, help="key = value file; command line flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a standard suite scene to the container format")
    p.add_argument("--scene", default="single_occluder",
                   choices=[k for k, _ in synthgen.standard_suite(3, 32)])
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--dmax", type=float, default=synthgen.D_MAX)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("patterns", help="print the occlusion pattern family")
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--json", default=None, metavar="PATH")
    p.set_defaults(func=cmd_patterns)

    p = sub.add_parser("estimate", help="plane-sweep disparity estimation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_sweep_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("eval", help="score a disparity map against ground truth")
    p.add_argument("--est", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--eps", type=float, action="append", default=None)
    p.add_argument("--border", type=int, default=None)
    p.add_argument("--mask", default=None, help="PNG, nonzero = evaluated")
    p.add_argument("--json", default=None, metavar="PATH")
    p.add_argument("--render-dir", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-loss", help="evaluate the training objective for a disparity map")
    p.add_argument("--input", required=True)
    p.add_argument("--disp", required=True, help="raw disparity PFM")
    p.add_argument("--final", default=None, help="refined disparity PFM (defaults to --disp)")
    p.add_argument("--lambda1", type=float, default=LAMBDA1)
    p.add_argument("--lambda2", type=float, default=LAMBDA2)
    p.add_argument("--gamma", type=float, default=GAMMA)
    p.add_argument("--tau", type=float, default=TAU)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--json", default=None, metavar="PATH")
    p.set_defaults(func=cmd_eval_loss)

    p = sub.add_parser("suite", help="run the synthetic suite end to end")
    p.add_argument("--output", required=True)
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--scenes", default=None, help="comma separated subset")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-images", action="store_true")
    p.set_defaults(func=cmd_suite)
    return parser


def read_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise ConfigError(f"unknown command {name!r}")


def _apply_config(parser, argv) -> None:
    """Install config-file values as subcommand defaults so explicit flags override them."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config_file(known.config)
    command = next((a for a in rest if not a.startswith("-")), None)
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "func")}
    defaults = {}
    for key, raw in values.items():
        if key not in actions:
            raise ConfigError(f"unknown config key {key!r} for {command}")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(act, argparse._StoreConstAction):
            defaults[key] = raw
        else:
            try:
                defaults[key] = act.type(raw) if act.type else raw
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
            if act.choices is not None and defaults[key] not in act.choices:
                raise ConfigError(f"bad value for {key}: {raw!r}")
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    log.info("resolved config: %s", json.dumps(resolved, sort_keys=True, default=str))
    try:
        return args.func(args)
    except (ConfigError, PatternError) as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except (LightFieldError, MetricsError, synthgen.SceneError, FileNotFoundError, KeyError) as e:
        log.error("data error: %s", e)
        return EXIT_DATA
    except OSError as e:
        log.error("I/O error: %s", e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
