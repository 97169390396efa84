from __future__ import annotations

import json

import numpy as np
import pytest

from opalfield.lightfield import (
    ALL_DIRECTIONS,
    Direction,
    DisparityMap,
    LightField,
    LightFieldError,
    extract_view_line,
    load_lightfield,
    save_lightfield,
    view_filename,
)


def _random_lf(n=9, h=6, w=7, c=3, seed=0):
    rng = np.random.default_rng(seed)
    return LightField(rng.random((n, n, h, w, c)))


def test_horizontal_line_offsets():
    line = extract_view_line(_random_lf(), Direction.HORIZONTAL)
    assert line.offsets.tolist() == [[0, t] for t in range(-4, 5)]


def test_diagonal_main_line_offsets():
    line = extract_view_line(_random_lf(), Direction.DIAGONAL_MAIN)
    assert line.offsets.tolist() == [[t, t] for t in range(-4, 5)]


def test_three_view_vertical_line_has_central_middle():
    lf = _random_lf(n=3)
    line = extract_view_line(lf, Direction.VERTICAL)
    assert len(line.views) == 3
    assert np.array_equal(line.views[1], lf.center)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_four_lines_cover_4n_minus_3_views(n):
    lf = _random_lf(n=n)
    seen = set()
    for d in ALL_DIRECTIONS:
        line = extract_view_line(lf, d)
        for (du, dv), view in zip(line.offsets, line.views):
            assert np.array_equal(view, lf.view(int(du), int(dv)))
            seen.add((int(du), int(dv)))
    assert len(seen) == 4 * n - 3


@pytest.mark.parametrize("d", ALL_DIRECTIONS)
def test_reversed_line_negates_offsets(d):
    line = extract_view_line(_random_lf(n=7), d)
    assert np.array_equal(line.offsets[::-1], -line.offsets)


def test_lightfield_rejects_bad_shapes():
    with pytest.raises(LightFieldError):
        LightField(np.zeros((8, 8, 4, 4, 3)))
    with pytest.raises(LightFieldError):
        LightField(np.zeros((3, 5, 4, 4, 3)))
    with pytest.raises(LightFieldError):
        LightField(np.zeros((3, 3, 4, 4, 2)))


def test_lightfield_is_immutable():
    lf = _random_lf()
    with pytest.raises(ValueError):
        lf.views[0, 0, 0, 0, 0] = 1.0


def test_direction_parse():
    assert Direction.parse("horizontal") is Direction.HORIZONTAL
    with pytest.raises(LightFieldError):
        Direction.parse("sideways")


def test_disparity_map_validity_defaults_to_finite():
    d = DisparityMap(np.array([[0.0, np.nan], [1.0, 2.0]]))
    assert d.valid.tolist() == [[True, False], [True, True]]
    assert DisparityMap.constant(1.5, (2, 3)).values.tolist() == [[1.5] * 3] * 2


@pytest.mark.parametrize("channels", [1, 3])
def test_container_round_trip(tmp_path, channels):
    lf = _random_lf(n=3, h=5, w=4, c=channels)
    save_lightfield(lf, tmp_path / "lf")
    back = load_lightfield(tmp_path / "lf")
    tol = 0.5 / 65535 if channels == 1 else 0.5 / 255
    assert back.views.shape == lf.views.shape
    assert np.abs(back.views - lf.views).max() <= tol + 1e-12
    again = load_lightfield(tmp_path / "lf")
    assert np.array_equal(again.views, back.views)


def test_load_nine_by_nine(tmp_path):
    lf = _random_lf(n=9, h=8, w=8)
    save_lightfield(lf, tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta == {"angular_n": 9, "height": 8, "width": 8}
    assert load_lightfield(tmp_path).angular_n == 9


def test_load_view_count_mismatch(tmp_path):
    save_lightfield(_random_lf(n=9, h=4, w=4), tmp_path)
    (tmp_path / view_filename(8, 8)).unlink()
    with pytest.raises(LightFieldError, match="view count mismatch"):
        load_lightfield(tmp_path)


def test_load_even_angular_resolution(tmp_path):
    save_lightfield(_random_lf(n=3, h=4, w=4), tmp_path)
    (tmp_path / "meta.json").write_text(json.dumps({"angular_n": 8, "height": 4, "width": 4}))
    with pytest.raises(LightFieldError, match="angular resolution must be odd"):
        load_lightfield(tmp_path)


def test_load_inconsistent_dimensions(tmp_path):
    save_lightfield(_random_lf(n=3, h=4, w=4), tmp_path)
    (tmp_path / "meta.json").write_text(json.dumps({"angular_n": 3, "height": 5, "width": 4}))
    with pytest.raises(LightFieldError, match="inconsistent dimensions"):
        load_lightfield(tmp_path)


def test_load_missing_meta(tmp_path):
    with pytest.raises(LightFieldError):
        load_lightfield(tmp_path)
