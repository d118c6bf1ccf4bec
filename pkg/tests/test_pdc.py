import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leadepth.core import DepthMap, ImageFrame, Rect, crop, pad_into
from leadepth.errors import EmptyDistribution, OracleUnavailable
from leadepth.pdc import (ConstantFill, DistributionSet, GuidedInterpolator, NearestFill,
                          NoisyOracle, PdcConfig, builtin_generators, compose_full,
                          derive_seed, derive_stage, make_generator, uncertainty)
from leadepth.propagation import build_schedule
from leadepth.resample import ResampleMode, resample
from leadepth.scene import plane_scene, render_scene

from conftest import brute_objective, loop_population_std


def random_stage(rng, n=5, shape=(8, 8)):
    cands = [DepthMap(rng.uniform(1, 10, shape)) for _ in range(n)]
    prev = rng.uniform(1, 10, shape)
    prev[rng.random(shape) < 0.5] = 0
    part = rng.uniform(1, 10, shape)
    part[rng.random(shape) < 0.8] = 0
    return DistributionSet(tuple(cands)), DepthMap(prev), DepthMap(part)


# uncertainty

def test_uncertainty_identical_candidates(rng):
    d = DepthMap(rng.uniform(1, 9, (5, 6)))
    assert (uncertainty(DistributionSet((d,) * 4)).values == 0).all()


def test_uncertainty_two_values():
    p = DistributionSet((DepthMap(np.full((2, 2), 2.0)), DepthMap(np.full((2, 2), 4.0))))
    np.testing.assert_array_equal(uncertainty(p).values, 1.0)


def test_uncertainty_single_sample(rng):
    assert (uncertainty(DistributionSet((DepthMap(rng.uniform(1, 2, (3, 3))),))).values == 0).all()


def test_uncertainty_matches_loop(rng):
    cands = [rng.uniform(1, 20, (4, 5)) for _ in range(6)]
    u = uncertainty(DistributionSet(tuple(DepthMap(c) for c in cands))).values
    want = loop_population_std(cands)
    for y in range(4):
        for x in range(5):
            assert u[y, x] == pytest.approx(want[y][x], rel=1e-12, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(0.0, 100.0))
def test_uncertainty_permutation_and_shift(seed, c):
    rng = np.random.default_rng(seed)
    cands = [DepthMap(rng.uniform(1, 10, (4, 4))) for _ in range(5)]
    u = uncertainty(DistributionSet(tuple(cands))).values
    perm = [cands[i] for i in rng.permutation(5)]
    np.testing.assert_allclose(uncertainty(DistributionSet(tuple(perm))).values, u, rtol=1e-9, atol=1e-12)
    shifted = [DepthMap(d.values + c) for d in cands]
    np.testing.assert_allclose(uncertainty(DistributionSet(tuple(shifted))).values, u,
                               rtol=1e-9, atol=1e-9)


def test_distribution_set_requires_full_coverage():
    with pytest.raises(ValueError):
        DistributionSet((DepthMap([[1.0, 0.0]]),))
    with pytest.raises(EmptyDistribution):
        DistributionSet(())


# selection

def test_derive_single_candidate(rng):
    p, prev, part = random_stage(rng, n=1)
    assert derive_stage(p, prev, part, PdcConfig()) is p.candidates[0]


def test_derive_exact_match_wins(rng):
    gt = rng.uniform(2, 8, (6, 6))
    prev = gt.copy()
    prev[rng.random(gt.shape) < 0.5] = 0
    part = gt.copy()
    part[rng.random(gt.shape) < 0.7] = 0
    cands = [DepthMap(gt + rng.normal(0, 0.5, gt.shape).clip(-1, 1)) for _ in range(4)]
    cands.insert(2, DepthMap(gt))
    p = DistributionSet(tuple(cands))
    assert derive_stage(p, DepthMap(prev), DepthMap(part), PdcConfig()) is cands[2]


@pytest.mark.parametrize("norm", ["l1", "l2"])
def test_derive_matches_brute_force(rng, norm):
    for _ in range(10):
        p, prev, part = random_stage(rng)
        cfg = PdcConfig(lam=1.0, norm=norm)
        objs = [brute_objective(c.values, prev.values, part.values, 1.0, norm) for c in p.candidates]
        assert derive_stage(p, prev, part, cfg) is p.candidates[int(np.argmin(objs))]


def test_derive_tie_goes_to_lowest_index(rng):
    d = DepthMap(rng.uniform(1, 2, (3, 3)))
    p = DistributionSet((DepthMap(d.values + 1), d, DepthMap(d.values.copy())))
    assert derive_stage(p, d, d, PdcConfig()) is p.candidates[1]


def test_lambda_extremes():
    shape = (4, 4)
    prev = np.zeros(shape)
    prev[:, :2] = 5.0
    part = np.zeros(shape)
    part[:, 2:] = 9.0
    # Candidate 0 agrees with prev, candidate 1 agrees with partial.
    c0 = np.where(prev > 0, 5.0, 1.0)
    c1 = np.where(part > 0, 9.0, 1.0)
    p = DistributionSet((DepthMap(c0), DepthMap(c1)))
    assert derive_stage(p, DepthMap(prev), DepthMap(part), PdcConfig(lam=0.0)) is p.candidates[0]
    assert derive_stage(p, DepthMap(prev), DepthMap(part), PdcConfig(lam=1e12)) is p.candidates[1]


def test_pdc_config_validation():
    with pytest.raises(ValueError):
        PdcConfig(lam=-1)
    with pytest.raises(ValueError):
        PdcConfig(samples_per_stage=0)
    with pytest.raises(ValueError):
        PdcConfig(norm="linf")


# generators

def test_catalog_names():
    assert set(builtin_generators()) >= {"noisy-oracle", "guided-interpolator", "constant-fill"}


def test_noisy_oracle_zero_noise_is_gt(rng):
    gt = DepthMap(rng.uniform(1, 5, (6, 8)))
    gen = NoisyOracle(gt)
    r = Rect(1, 2, 5, 3)
    out = gen(None, DepthMap.zeros(3, 5), sample_index=0, seed=7, rect=r)
    assert out == crop(gt, r)


def test_noisy_oracle_needs_gt():
    with pytest.raises(OracleUnavailable):
        make_generator("noisy-oracle")


def test_noisy_oracle_deterministic(rng):
    gt = DepthMap(rng.uniform(1, 5, (6, 8)))
    gen = NoisyOracle(gt, sigma=0.1, jitter=0.05)
    r = Rect.full(6, 8)
    a = gen(None, gt, sample_index=0, seed=11, rect=r)
    b = gen(None, gt, sample_index=0, seed=11, rect=r)
    c = gen(None, gt, sample_index=0, seed=12, rect=r)
    assert a == b and a != c


def test_guided_interpolator_identity_on_full(rng):
    d = DepthMap(rng.uniform(1, 5, (6, 7)))
    img = ImageFrame(rng.random((6, 7, 3)))
    assert GuidedInterpolator()(img, d, sample_index=0, seed=0, rect=Rect.full(6, 7)) == d


def test_guided_interpolator_fills_and_follows_edges():
    img = np.zeros((8, 8, 3))
    img[:, 4:] = 1.0  # vertical edge between columns 3 and 4
    d = np.zeros((8, 8))
    d[:, 0] = 2.0
    d[:, 7] = 10.0
    out = GuidedInterpolator(intensity_sigma=0.05)(ImageFrame(img), DepthMap(d), sample_index=0,
                                                   seed=0, rect=Rect.full(8, 8)).values
    assert (out > 0).all()
    assert np.all(out[:, 3] < 3.0) and np.all(out[:, 4] > 9.0)


def test_constant_fill_uses_median():
    d = np.array([[1.0, 0.0, 3.0], [0.0, 8.0, 0.0]])
    out = ConstantFill()(None, DepthMap(d), sample_index=0, seed=0, rect=Rect.full(2, 3)).values
    m = float(np.median([1.0, 3.0, 8.0]))
    np.testing.assert_array_equal(out, [[1.0, m, 3.0], [m, 8.0, m]])


def test_derive_seed_stable_and_distinct():
    s = {derive_seed(5, i, k) for i in range(1, 6) for k in range(5)}
    assert len(s) == 25
    assert derive_seed(5, 2, 3) == derive_seed(5, 2, 3)
    assert all(0 <= x < 2 ** 64 for x in s)


# composition

@pytest.fixture
def plane():
    sc = plane_scene(64, 48, depth=6.0, tilt=0.4)
    img, gt = render_scene(sc, 0)
    part = resample(gt, ResampleMode("center", (0.35, 0.5)))
    return img, gt, part


def test_compose_nearest_fill_on_plane(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 5)
    res = compose_full(img, part.depth, sched, NearestFill(), PdcConfig(samples_per_stage=1),
                       seed=0, coarse=gt)
    np.testing.assert_allclose(res.depth.values, gt.values, rtol=1e-12)
    assert (res.uncertainty.values == 0).all()


def test_compose_single_stage_single_sample(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 1)
    gen = NoisyOracle(gt, sigma=0.05)
    cfg = PdcConfig(samples_per_stage=1)
    res = compose_full(img, part.depth, sched, gen, cfg, seed=9, coarse=gt)
    full = sched.stages[-1]
    refined = pad_into(crop(part.depth, sched.stages[0]), gt.shape, sched.stages[0])
    cand = gen(img, refined, sample_index=0, seed=derive_seed(9, 1, 0), rect=full)
    expected = derive_stage(DistributionSet((cand,)), refined, part.depth, cfg)
    assert res.depth == expected


class PermutedOracle:
    """Candidate k of a stage is the noisy GT drawn with stream ``perm[k]``."""

    def __init__(self, gt, perm, sigma=0.2):
        self.gt, self.perm, self.sigma = gt, perm, sigma

    def __call__(self, image, mixed, *, sample_index, seed, rect):
        j = self.perm[sample_index]
        rng = np.random.default_rng([rect.x0, rect.y0, rect.width, rect.height, j])
        base = self.gt.values[rect.slices]
        return DepthMap(np.maximum(base + self.sigma * rng.standard_normal(base.shape), 1e-3))


def test_compose_permutation_invariant(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 4)
    a = compose_full(img, part.depth, sched, PermutedOracle(gt, [0, 1, 2, 3, 4]), seed=1, coarse=gt)
    b = compose_full(img, part.depth, sched, PermutedOracle(gt, [3, 0, 4, 1, 2]), seed=1, coarse=gt)
    for ra in a.stages:
        assert len(set(ra.objectives)) == len(ra.objectives)
    assert a.depth == b.depth
    np.testing.assert_allclose(a.uncertainty.values, b.uncertainty.values, rtol=1e-12, atol=1e-15)


def test_compose_noise_continuity(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 5)
    errs = []
    for sigma in (0.0, 0.01, 0.1):
        res = compose_full(img, part.depth, sched, NoisyOracle(gt, sigma=sigma), seed=4, coarse=gt)
        errs.append(float(np.sqrt(((res.depth.values - gt.values) ** 2).mean())))
    assert errs[0] == 0.0
    assert errs[0] <= errs[1] <= errs[2]


def test_compose_without_coarse_uses_generator(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 3)
    res = compose_full(img, part.depth, sched, GuidedInterpolator(), seed=0)
    assert res.depth.mask.all()
    np.testing.assert_array_equal(res.depth.values[part.depth.mask], part.depth.values[part.depth.mask])


def test_compose_is_reproducible(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, part.rect, 5)
    gen = NoisyOracle(gt, sigma=0.1, jitter=0.05)
    a = compose_full(img, part.depth, sched, gen, seed=42, coarse=gt)
    b = compose_full(img, part.depth, sched, gen, seed=42, coarse=gt)
    assert a.depth == b.depth
    assert [r.seeds for r in a.stages] == [r.seeds for r in b.stages]


def test_compose_rejects_partial_outside_first_stage(plane):
    img, gt, part = plane
    sched = build_schedule(gt.shape, Rect(0, 0, 5, 5), 2)
    with pytest.raises(Exception):
        compose_full(img, part.depth, sched, NearestFill(), seed=0, coarse=gt)
