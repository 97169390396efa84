from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from opalfield.lightfield import ALL_DIRECTIONS, LightField, LightFieldError, extract_view_line
from opalfield.metrics import border_mask
from opalfield.objective import (
    GAMMA,
    LAMBDA1,
    LAMBDA2,
    direction_terms,
    opal_loss,
    photometric_loss,
    smoothness_loss,
    total_objective,
)
from opalfield.patterns import generate_pattern_set
from opalfield.photometric import TAU, pattern_costs, residual_stack, select_pattern
from opalfield.synthgen import Layer, SceneSpec, Texture, render_scene


def test_shipped_constants():
    assert (LAMBDA1, LAMBDA2, GAMMA, TAU) == (0.6, 0.3, 150.0, 0.01)


def test_no_occlusion_gt_loss_is_tiny(rendered):
    lf, gt = rendered["no_occlusion"]
    losses = opal_loss(lf, gt.disparity)
    assert set(losses) == set(ALL_DIRECTIONS)
    assert all(v < 1e-3 for v in losses.values())


def test_opal_far_below_unmasked_loss_in_band(rendered):
    lf, gt = rendered["single_occluder"]
    band = gt.occlusion.any(axis=(0, 1))
    opal = sum(opal_loss(lf, gt.disparity, pixel_mask=band).values())
    plain = sum(photometric_loss(lf, gt.disparity, pixel_mask=band).values())
    assert plain > 0
    assert opal < 0.25 * plain


def test_constant_texture_loss_is_zero():
    spec = SceneSpec((Layer(0.0, Texture("constant", value=0.5)),), angular_n=5, height=16, width=16)
    lf, _ = render_scene(spec)
    for d in (-2.0, 0.0, 1.3):
        assert all(v == 0.0 for v in opal_loss(lf, np.full((16, 16), d)).values())


def test_selection_inside_loss_is_the_photometric_selection(rendered):
    lf, gt = rendered["double_occluder"]
    for beta in (1, 2, 4):
        ps = generate_pattern_set(9, beta)
        for d in ALL_DIRECTIONS:
            terms = direction_terms(lf, gt.disparity, ps, d)
            rs = residual_stack(extract_view_line(lf, d), gt.disparity)
            assert np.array_equal(terms.selection, select_pattern(pattern_costs(rs, ps), ps, TAU))
            expect = np.moveaxis(ps.upsampled[terms.selection], -1, 0) & rs.valid
            assert np.array_equal(terms.weights, expect)


def test_pattern_set_must_match_angular_resolution(rendered):
    lf, gt = rendered["no_occlusion"]
    with pytest.raises(LightFieldError):
        opal_loss(lf, gt.disparity, generate_pattern_set(5, 1))
    with pytest.raises(LightFieldError):
        opal_loss(lf, np.zeros((4, 4)))


def test_smoothness_constant_disparity():
    img = np.random.default_rng(0).random((8, 9, 3))
    assert smoothness_loss(np.full((8, 9), 2.5), img) == 0.0


def test_smoothness_x_ramp_on_flat_image():
    ramp = np.tile(np.arange(10, dtype=float), (7, 1))
    assert abs(smoothness_loss(ramp, np.full((7, 10, 3), 0.4), 150.0) - 1.0) <= 1e-9


def test_smoothness_step_on_strong_edge():
    h, w = 6, 10
    disp = np.zeros((h, w))
    disp[:, 5:] = 3.0
    img = np.zeros((h, w, 3))
    img[:, 5:] = 0.5
    val = smoothness_loss(disp, img, 150.0)
    # one edge column out of (w - 1) contributes 3 * e^-75 per row
    expect = 3.0 * math.exp(-75.0) / (w - 1)
    assert abs(val - expect) <= 1e-9
    assert val < 1e-32 * 3.0


def test_smoothness_rejects_bad_gamma():
    with pytest.raises(ValueError):
        smoothness_loss(np.zeros((3, 3)), np.zeros((3, 3)), 0.0)


@given(arrays(np.float64, (5, 6), elements=st.floats(-4, 4)), st.floats(-3, 3), st.integers(0, 100))
def test_smoothness_invariant_under_constant_shift(d, c, seed):
    img = np.random.default_rng(seed).random((5, 6, 3))
    a = smoothness_loss(d, img)
    b = smoothness_loss(d + c, img)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


@given(arrays(np.float64, (5, 6), elements=st.floats(-4, 4)), st.integers(0, 100), st.floats(1.0, 300.0))
def test_smoothness_matches_loop_oracle(d, seed, gamma):
    img = np.random.default_rng(seed).random((5, 6, 3))
    assert smoothness_loss(d, img, gamma) == pytest.approx(
        oracles.finite_difference_smoothness(d, img, gamma), rel=1e-12, abs=1e-12
    )


@pytest.fixture(scope="module")
def small_scene():
    spec = SceneSpec((Layer(0.0, Texture("noise", seed=1)), Layer(2.0, Texture("noise", seed=2), (8, 8, 20, 20))),
                     angular_n=9, height=28, width=28)
    return render_scene(spec)


def test_breakdown_fields_and_sum(small_scene):
    lf, gt = small_scene
    raw = gt.disparity.values + 0.25
    br = total_objective(lf, raw, gt.disparity)
    assert br.opal_total == pytest.approx(sum(br.opal_per_direction.values()), rel=1e-12)
    assert set(br.opal_per_direction) == {d.value for d in ALL_DIRECTIONS}
    assert min(br.opal_total, br.opal_final, br.smooth, br.total) >= 0
    assert br.total == pytest.approx(0.6 * br.opal_total + 0.4 * br.opal_final + 0.3 * br.smooth, rel=1e-12)
    assert br.constants == {"tau": 0.01, "gamma": 150.0, "lambda1": 0.6, "lambda2": 0.3, "beta": 1}
    assert set(br.to_dict()) == {"opal_per_direction", "opal_total", "opal_final", "smooth", "total", "constants"}


def test_lambda1_one_ignores_final_in_opal_terms(small_scene):
    lf, gt = small_scene
    raw = gt.disparity.values
    final = gt.disparity.values + np.random.default_rng(4).normal(0, 0.3, raw.shape)
    br = total_objective(lf, raw, final, lambda1=1.0)
    raw_only = sum(opal_loss(lf, raw).values())
    assert br.total == pytest.approx(raw_only + 0.3 * smoothness_loss(final, lf.center), rel=1e-12)


def test_lambda2_zero_drops_smoothness(small_scene):
    lf, gt = small_scene
    rough = gt.disparity.values + np.random.default_rng(5).normal(0, 0.5, gt.disparity.shape)
    a = total_objective(lf, gt.disparity, rough, lambda2=0.0)
    assert a.total == pytest.approx(0.6 * a.opal_total + 0.4 * a.opal_final, rel=1e-12)


def test_total_is_tiny_at_gt_without_occlusion(rendered):
    lf, gt = rendered["no_occlusion"]
    assert total_objective(lf, gt.disparity, gt.disparity).total < 1e-3


@pytest.mark.parametrize("kwargs", [dict(lambda1=1.5), dict(lambda1=-0.1), dict(lambda2=-1.0)])
def test_total_rejects_bad_weights(small_scene, kwargs):
    lf, gt = small_scene
    with pytest.raises(ValueError):
        total_objective(lf, gt.disparity, **kwargs)


def test_losses_are_size_normalised():
    rng = np.random.default_rng(9)
    lf = LightField(rng.random((3, 3, 12, 12, 1)))
    full = opal_loss(lf, np.zeros((12, 12)))
    tiled = LightField(np.tile(np.asarray(lf.views), (1, 1, 2, 2, 1)))
    big = opal_loss(tiled, np.zeros((24, 24)))
    for d in ALL_DIRECTIONS:
        assert big[d] == pytest.approx(full[d], rel=1e-12)


def test_masked_loss_uses_only_masked_pixels(small_scene):
    lf, gt = small_scene
    mask = border_mask(gt.disparity.shape, 10)
    a = opal_loss(lf, gt.disparity.values + 1.0, pixel_mask=mask)
    b = opal_loss(lf, gt.disparity.values + 1.0)
    assert a != b
