from __future__ import annotations

import hashlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from opalfield import synthgen
from opalfield.metrics import (
    BAD_TONE,
    GOOD_TONE,
    MetricsError,
    badpix,
    default_border,
    evaluate,
    mse_x100,
    render_maps,
)

GT = np.zeros((6, 8))
HALF = np.zeros((6, 8), dtype=bool)
HALF[:3] = True

# frozen from the first render; PNG encoding is deterministic for a fixed Pillow/zlib
GOLDEN_SHA256 = {
    "disparity.png": "85847c034d13836df7f0e626f4e57c6dabb507d6a01d86674aee06a71104aea6",
    "error.png": "5a1b9d45dcc7bee8e1d37e58ebf1524d2179ce474678f10e89fb5d44d48a4e25",
}


def metric_examples() -> dict[str, bool]:
    """The six closed-form metric examples; name -> holds."""
    return {
        "mse identical": mse_x100(GT, GT) == 0.0,
        "mse offset 0.1": abs(mse_x100(GT + 0.1, GT) - 1.0) < 1e-12,
        "mse offset 0.1 on half": abs(mse_x100(np.where(HALF, 0.1, 0.0), GT) - 0.5) < 1e-12,
        "badpix identical": badpix(GT, GT, eps=0.07) == 0.0,
        "badpix offset 0.1": badpix(GT + 0.1, GT, eps=0.07) == 100.0,
        "badpix boundary 0.07": badpix(GT + 0.07, GT, eps=0.07) == 0.0,
    }


@pytest.mark.parametrize("name", list(metric_examples()))
def test_metric_example(name):
    assert metric_examples()[name]


def test_mask_restricts_evaluation():
    est = np.where(HALF, 1.0, 0.0)
    assert mse_x100(est, GT, ~HALF) == 0.0
    assert badpix(est, GT, HALF) == 100.0


@pytest.mark.parametrize("fn", [mse_x100, badpix])
def test_empty_mask_and_shape_errors(fn):
    with pytest.raises(MetricsError):
        fn(GT, GT, np.zeros_like(HALF))
    with pytest.raises(MetricsError):
        fn(GT, np.zeros((5, 8)))


def test_nonpositive_eps_rejected():
    with pytest.raises(MetricsError):
        badpix(GT, GT, eps=0.0)


def test_evaluate_crops_border():
    assert default_border(4.0) == 5
    big = np.zeros((20, 20))
    bad = big.copy()
    bad[0] = 9.0  # only the cropped border row is wrong
    rep = evaluate(bad, big)
    assert rep.mse_x100 == 0.0
    assert rep.evaluated_pixels == 100
    assert rep.mask_spec == {"border_crop": 5, "external_mask": None}
    assert set(rep.badpix) == {"0.07"}


def test_evaluate_multiple_eps_and_external_mask():
    est = np.full((20, 20), 0.05)
    mask = np.zeros((20, 20), dtype=bool)
    mask[8:12, 8:12] = True
    rep = evaluate(est, np.zeros((20, 20)), border=0, eps=(0.01, 0.07), mask=mask, mask_path="m.png")
    assert rep.badpix == {"0.01": 100.0, "0.07": 0.0}
    assert rep.evaluated_pixels == 16
    assert rep.mask_spec["external_mask"] == "m.png"


finite = st.floats(-4, 4, allow_nan=False)


@given(arrays(np.float64, (5, 5), elements=finite), arrays(np.float64, (5, 5), elements=finite))
def test_metrics_symmetric(a, b):
    assert mse_x100(a, b) == mse_x100(b, a)
    assert badpix(a, b) == badpix(b, a)


@given(arrays(np.float64, (4, 6), elements=finite), arrays(np.float64, (4, 6), elements=finite),
       st.floats(0.001, 2.0), st.floats(0.001, 2.0))
def test_badpix_nonincreasing_in_eps(a, b, e1, e2):
    lo, hi = sorted((e1, e2))
    assert badpix(a, b, eps=hi) <= badpix(a, b, eps=lo)
    assert 0.0 <= badpix(a, b, eps=lo) <= 100.0


@given(arrays(np.float64, (4, 6), elements=finite), st.randoms(use_true_random=False))
def test_mse_invariant_under_permutation(a, rnd):
    b = np.zeros_like(a)
    perm = list(range(a.size))
    rnd.shuffle(perm)
    pa = a.ravel()[perm].reshape(a.shape)
    assert mse_x100(pa, b) == pytest.approx(mse_x100(a, b), rel=1e-12, abs=1e-15)


def test_error_map_all_good_when_exact(tmp_path):
    render_maps(GT, tmp_path, gt=GT)
    err = np.asarray(Image.open(tmp_path / "error.png"))
    assert (err == np.array(GOOD_TONE, dtype=np.uint8)).all()


def test_constant_estimate_gives_flat_gray(tmp_path):
    render_maps(np.full((6, 8), 1.0), tmp_path)
    img = np.asarray(Image.open(tmp_path / "disparity.png"))
    assert img.dtype == np.uint8 and np.unique(img).tolist() == [159]
    assert not (tmp_path / "error.png").exists()


def test_error_map_marks_bad_pixels(tmp_path):
    est = np.where(HALF, 0.2, 0.0)
    render_maps(est, tmp_path, gt=GT)
    err = np.asarray(Image.open(tmp_path / "error.png"))
    assert (err[HALF] == np.array(BAD_TONE, dtype=np.uint8)).all()
    assert (err[~HALF] == np.array(GOOD_TONE, dtype=np.uint8)).all()


def test_render_golden_bytes(tmp_path):
    _, gt = synthgen.render_scene(synthgen.suite_scene("double_occluder", size=32))
    est = gt.disparity.values.copy()
    est[::3, ::5] += 0.25
    for p in render_maps(est, tmp_path, gt=gt.disparity):
        assert hashlib.sha256(p.read_bytes()).hexdigest() == GOLDEN_SHA256[p.name]
