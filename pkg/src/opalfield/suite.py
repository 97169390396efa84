"""Run the standard synthetic suite through the estimator variants and score it."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import synthgen
from .estimator import SweepConfig, estimate, preset
from .pfm import write_pfm
from .metrics import BADPIX_EPS, border_mask, default_border, evaluate, mse_x100, badpix, render_maps

log = logging.getLogger(__name__)

# acceptance thresholds checked by the suite run
BADPIX_LIMIT = 5.0
MSE_LIMIT = 1.0
NEUTRALITY_PP = 0.5
ABLATION_MIN_INCREASE = 0.5


@dataclass(frozen=True)
class Variant:
    name: str
    config: SweepConfig


def variants(threads: int | None = None) -> list[Variant]:
    return [
        Variant("full", preset("full", threads=threads)),
        Variant("fast", preset("fast", threads=threads)),
        Variant("fast_no_opal", preset("fast", use_patterns=False, threads=threads)),
    ]


def scene_category(name: str) -> str:
    if name in synthgen.TEXTURELESS_SCENES:
        return "textureless"
    if name in synthgen.OCCLUDER_SCENES:
        return "occluder"
    return "no_occlusion"


def occlusion_band(gt: synthgen.GroundTruth) -> np.ndarray:
    return gt.occlusion.any(axis=(0, 1))


def _score(est, gt, band_mask, border: int) -> dict:
    rep = evaluate(est, gt.disparity, border=border)
    out = {"image": rep.to_dict()}
    if band_mask.any():
        out["band"] = {
            "mse_x100": mse_x100(est, gt.disparity, band_mask),
            "badpix": {f"{BADPIX_EPS:g}": badpix(est, gt.disparity, band_mask)},
            "evaluated_pixels": int(band_mask.sum()),
        }
    return out


def run_suite(
    output_dir: str | Path | None = None,
    n: int = 9,
    size: int = 128,
    scenes: list[str] | None = None,
    threads: int | None = None,
    render: bool = True,
) -> dict:
    """Estimate every suite scene with every variant; returns the JSON-ready report."""
    out = Path(output_dir) if output_dir is not None else None
    border = default_border()
    suite = [(k, s) for k, s in synthgen.standard_suite(n, size) if scenes is None or k in scenes]
    report = {"config": {"angular_n": n, "size": size, "border_crop": border,
                         "variants": {v.name: v.config.to_dict() for v in variants()}},
              "scenes": {}}
    for name, spec in suite:
        lf, gt = synthgen.render_scene(spec)
        band = occlusion_band(gt) & border_mask(gt.disparity.shape, border)
        entry = {"category": scene_category(name), "variants": {}}
        for v in variants(threads):
            t0 = time.perf_counter()
            res = estimate(lf, v.config)
            log.info("%s / %s: %.1f s", name, v.name, time.perf_counter() - t0)
            scores = _score(res.disparity, gt, band, border)
            scores["losses"] = res.losses.to_dict()
            scores["stats"] = res.stats
            entry["variants"][v.name] = scores
            if out is not None:
                (out / name).mkdir(parents=True, exist_ok=True)
                write_pfm(res.disparity, out / name / f"{v.name}_disparity.pfm")
                if render:
                    render_maps(res.disparity, out / name, gt=gt.disparity, prefix=f"{v.name}_")
        report["scenes"][name] = entry
    report["checks"] = acceptance_checks(report)
    report["passed"] = all(c["passed"] for c in report["checks"])
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (out / "summary.txt").write_text(summary_table(report) + "\n", encoding="utf-8")
    return report


def acceptance_checks(report: dict) -> list[dict]:
    checks = []
    for name, entry in report["scenes"].items():
        cat = entry["category"]
        v = entry["variants"]
        if cat != "textureless" and "full" in v:
            img = v["full"]["image"]
            bp = img["badpix"][f"{BADPIX_EPS:g}"]
            checks.append({
                "check": "accuracy_full_hard", "scene": name,
                "passed": bp < BADPIX_LIMIT and img["mse_x100"] < MSE_LIMIT,
                "detail": {"badpix": bp, "mse_x100": img["mse_x100"]},
            })
        if cat == "occluder" and "fast" in v and "fast_no_opal" in v:
            aware = v["fast"]["band"]["mse_x100"]
            forced = v["fast_no_opal"]["band"]["mse_x100"]
            img_aware = v["fast"]["image"]["mse_x100"]
            img_forced = v["fast_no_opal"]["image"]["mse_x100"]
            checks.append({
                "check": "opal_ablation", "scene": name,
                "passed": forced > aware and forced >= (1.0 + ABLATION_MIN_INCREASE) * aware
                and img_forced >= img_aware,
                "detail": {"band_mse_aware": aware, "band_mse_forced": forced,
                           "image_mse_aware": img_aware, "image_mse_forced": img_forced},
            })
        if cat == "no_occlusion" and name == "no_occlusion" and "fast" in v and "fast_no_opal" in v:
            a = v["fast"]["image"]["badpix"][f"{BADPIX_EPS:g}"]
            f = v["fast_no_opal"]["image"]["badpix"][f"{BADPIX_EPS:g}"]
            checks.append({
                "check": "no_occlusion_neutrality", "scene": name,
                "passed": abs(a - f) < NEUTRALITY_PP, "detail": {"badpix_aware": a, "badpix_forced": f},
            })
    return checks


def summary_table(report: dict) -> str:
    key = f"{BADPIX_EPS:g}"
    lines = [f"{'scene':22s} {'category':13s} {'variant':13s} {'MSEx100':>9s} {'BadPix':>7s} {'bandMSE':>9s}"]
    for name, entry in report["scenes"].items():
        for vname, s in entry["variants"].items():
            band = s.get("band", {}).get("mse_x100")
            band_s = f"{band:9.4f}" if band is not None else f"{'-':>9s}"
            lines.append(
                f"{name:22s} {entry['category']:13s} {vname:13s} {s['image']['mse_x100']:9.4f} "
                f"{s['image']['badpix'][key]:7.2f} {band_s}"
            )
    lines.append("")
    for c in report["checks"]:
        lines.append(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']:26s} {c['scene']}")
    return "\n".join(lines)
