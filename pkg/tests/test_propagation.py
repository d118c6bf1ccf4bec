import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leadepth.core import DepthMap, Rect, crop, pad_into
from leadepth.errors import DegenerateRect, DimensionMismatch, EmptyMask
from leadepth.propagation import (StageSchedule, StageState, build_schedule, mix, run_stage,
                                  scale_adjust)

from conftest import balanced_gt


def test_scale_adjust_self_ratio(rng):
    d = DepthMap(rng.uniform(1, 5, (6, 6)))
    assert scale_adjust(d, d) == d


def test_scale_adjust_constant_factor(rng):
    gt, anchor = balanced_gt(rng)
    out = scale_adjust(gt.scaled(2.0), anchor)
    np.testing.assert_allclose(out.values, gt.values, rtol=1e-12, atol=0)


def test_scale_adjust_hand_example():
    anchor = DepthMap([[10.0, 0.0, 0.0]])
    blur = DepthMap([[5.0, 5.0, 0.0]])
    np.testing.assert_array_equal(scale_adjust(blur, anchor).values, [[10.0, 10.0, 0.0]])


def test_scale_adjust_keeps_invalid(rng):
    blur = DepthMap([[0.0, 3.0], [4.0, 0.0]])
    out = scale_adjust(blur, DepthMap([[7.0, 0.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(out.mask, blur.mask)


def test_scale_adjust_empty():
    with pytest.raises(EmptyMask):
        scale_adjust(DepthMap.zeros(2, 2), DepthMap(np.ones((2, 2))))
    with pytest.raises(EmptyMask):
        scale_adjust(DepthMap(np.ones((2, 2))), DepthMap.zeros(2, 2))


def test_mix_saturated_and_empty(rng):
    r = DepthMap(rng.uniform(1, 2, (4, 5)))
    s = DepthMap(rng.uniform(3, 4, (4, 5)))
    assert mix(r, s) == r
    assert mix(DepthMap.zeros(4, 5), s) == s


def test_mix_checkerboard(rng):
    h, w = 7, 9
    r = rng.uniform(1, 2, (h, w))
    r[(np.add.outer(np.arange(h), np.arange(w)) % 2) == 1] = 0
    s = rng.uniform(3, 4, (h, w))
    out = mix(DepthMap(r), DepthMap(s)).values
    for y in range(h):
        for x in range(w):
            assert out[y, x] == (r[y, x] if r[y, x] > 0 else s[y, x])


def test_mix_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mix(DepthMap.zeros(2, 2), DepthMap.zeros(2, 3))


def test_run_stage_consistent_input(rng):
    gt, anchor = balanced_gt(rng)
    assert run_stage(StageState(anchor, gt)) == gt


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0, 11.0])
def test_run_stage_constant_factor_correction(rng, c):
    gt, anchor = balanced_gt(rng)
    out = run_stage(StageState(anchor, gt.scaled(c)))
    np.testing.assert_allclose(out.values, gt.values, rtol=1e-9, atol=0)
    np.testing.assert_array_equal(out.values[anchor.mask], anchor.values[anchor.mask])


def test_run_stage_general_gt_uses_median_ratio(rng):
    gt = DepthMap(rng.uniform(2.0, 40.0, (12, 12)))
    inner = Rect(4, 4, 4, 4)
    anchor = pad_into(crop(gt, inner), gt.shape, inner)
    out = run_stage(StageState(anchor, gt.scaled(3.0)))
    ratio = np.median(gt.values[inner.slices]) / np.median(3.0 * gt.values)
    expected = np.where(anchor.mask, gt.values, 3.0 * gt.values * ratio)
    np.testing.assert_allclose(out.values, expected, rtol=1e-12)


def test_run_stage_refined_wins():
    blur = DepthMap(np.full((5, 5), 4.0))
    r = np.zeros((5, 5))
    r[2, 2] = 99.0
    out = run_stage(StageState(DepthMap(r), blur))
    assert out.values[2, 2] == 99.0


def test_stage_state_needs_anchor():
    with pytest.raises(EmptyMask):
        StageState(DepthMap.zeros(3, 3), DepthMap(np.ones((3, 3))))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
def test_run_stage_scale_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    blur = DepthMap(rng.uniform(1, 10, (8, 8)))
    r = rng.uniform(1, 10, (8, 8))
    r[rng.random((8, 8)) < 0.5] = 0
    r[0, 0] = 5.0
    refined = DepthMap(r)
    a = run_stage(StageState(refined, blur)).values
    b = run_stage(StageState(refined, blur.scaled(c))).values
    np.testing.assert_allclose(b, a, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_anchor_preserved_and_coverage_grows(seed):
    rng = np.random.default_rng(seed)
    blur = DepthMap(rng.uniform(1, 10, (9, 11)))
    r = rng.uniform(1, 10, (9, 11))
    r[rng.random(r.shape) < 0.7] = 0
    r[4, 5] = 3.0
    out = run_stage(StageState(DepthMap(r), blur))
    np.testing.assert_array_equal(out.values[r > 0], r[r > 0])
    assert out.mask.sum() >= (r > 0).sum()


def test_build_schedule_count_one():
    s = build_schedule((50, 60), Rect(10, 12, 20, 15), 1)
    assert s.stages == (Rect(10, 12, 20, 15), Rect(0, 0, 60, 50))


def test_build_schedule_degenerate_full():
    s = build_schedule((30, 40), Rect(0, 0, 40, 30), 5)
    assert s.count == 5
    assert all(r == Rect(0, 0, 40, 30) for r in s.stages)


def test_build_schedule_margins():
    s = build_schedule((100, 100), Rect(40, 40, 20, 20), 4)
    margins = [r.x0 for r in s.stages]
    assert margins == [40, 30, 20, 10, 0]
    for r in s.stages:
        assert (r.x0, r.y0, 100 - r.x1, 100 - r.y1) == (r.x0,) * 4
    for inner, outer in zip(s.stages, s.stages[1:]):
        for y in range(100):
            for x in range(100):
                if inner.y0 <= y < inner.y1 and inner.x0 <= x < inner.x1:
                    assert outer.y0 <= y < outer.y1 and outer.x0 <= x < outer.x1


def test_build_schedule_off_centre():
    s = build_schedule((60, 80), Rect(10, 40, 30, 20), 5)
    assert s.stages[-1] == Rect(0, 0, 80, 60)
    assert s.stages[0] == Rect(10, 40, 30, 20)
    for inner, outer in zip(s.stages, s.stages[1:]):
        assert outer.contains(inner)


def test_build_schedule_errors():
    with pytest.raises(DegenerateRect):
        build_schedule((10, 10), Rect(5, 5, 8, 8), 3)
    with pytest.raises(DegenerateRect):
        build_schedule((10, 10), Rect(2, 2, 4, 4), 0)


def test_schedule_serialization_round_trip():
    s = build_schedule((48, 64), Rect(20, 14, 24, 20), 5)
    assert StageSchedule.from_lists(s.as_lists()) == s


def test_schedule_rejects_non_nested():
    with pytest.raises(DegenerateRect):
        StageSchedule((Rect(0, 0, 5, 5), Rect(2, 2, 5, 5), Rect(0, 0, 10, 10)))
