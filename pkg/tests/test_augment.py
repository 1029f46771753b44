import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_pair
from core.engine.augment import (
    adjust_color,
    apply,
    apply_baseline,
    augment_region,
    color_jitter,
    cut_depth,
    cut_mix,
    cut_out,
    horizontal_flip,
    random_erasing,
    region_from_draws,
    rotate_pair,
    sample_region,
    sample_regions,
)
from core.engine.planes import luminance, normalize_depth
from core.engine.rng import RngStream
from core.errors import ParameterError, RegionBoundsError, ShapeMismatchError
from core.io.scenes import SceneSpec, generate_scene, scene_luminance
from core.models.augment_spec import AugmentSpec, BaselineSpec, FillMode, Method, REGION_METHODS
from core.models.images import DepthMap, Region, RgbImage, SamplePair


class TestRegionSampling:
    def test_full_draws_cover_whole_image(self):
        assert region_from_draws(0.0, 0.0, 1.0, 1.0, 100, 80, 1.0) == Region(0, 0, 100, 80)

    def test_hand_example(self):
        # l = 50, w = floor(50 * 0.5 * 0.5) = 12; u = 20, h = floor(20 * 0.5 * 0.5) = 5
        assert region_from_draws(0.5, 0.5, 0.5, 0.5, 100, 40, 0.5) == Region(50, 20, 12, 5)

    def test_small_extent_clamps_to_one_pixel(self):
        region = region_from_draws(0.99, 0.99, 0.01, 0.01, 100, 100, 0.1)
        assert (region.w, region.h) == (1, 1)
        assert region.fits(100, 100)

    @pytest.mark.parametrize("p", [0.0, -0.5, 1.5, float("nan")])
    def test_invalid_p_rejected(self, p):
        with pytest.raises(ParameterError):
            sample_region(RngStream(0), 10, 10, p)

    @given(
        width=st.integers(1, 600),
        height=st.integers(1, 600),
        p=st.floats(0.001, 1.0),
        seed=st.integers(0, 2**32),
    )
    def test_sampled_regions_are_legal(self, width, height, p, seed):
        rng = RngStream(seed)
        region = sample_region(rng, width, height, p)
        assert region.w >= 1 and region.h >= 1
        assert region.fits(width, height)
        assert rng.draws_consumed == 4

    def test_region_legality_over_many_shapes(self):
        gen = np.random.default_rng(8)
        total = 0
        for index in range(100):
            width, height = (int(v) for v in gen.integers(1, 1000, size=2))
            p = float(gen.uniform(0.001, 1.0))
            l, u, w, h = sample_regions(RngStream(index), width, height, p, 1000).T
            assert (w >= 1).all() and (h >= 1).all()
            assert (l >= 0).all() and (u >= 0).all()
            assert (l + w <= width).all() and (u + h <= height).all()
            total += len(w)
        assert total == 100_000

    def test_vectorised_sampler_matches_scalar_calls(self):
        scalar_rng = RngStream(17)
        scalar = [sample_region(scalar_rng, 544, 416, 0.5) for _ in range(200)]
        batch = sample_regions(RngStream(17), 544, 416, 0.5, 200)
        assert [tuple(r.to_dict().values()) for r in scalar] == [tuple(row) for row in batch.tolist()]

    @pytest.mark.parametrize("p", [0.25, 0.5, 0.75, 1.0])
    def test_mean_width_close_to_analytic_expectation(self, p):
        width, height = 544, 416
        regions = sample_regions(RngStream(2024), width, height, p, 100_000)
        l, u, w, h = regions.T
        assert (w >= 1).all() and (h >= 1).all()
        assert (l + w <= width).all() and (u + h <= height).all()
        assert w.mean() == pytest.approx(width * p / 4, rel=0.02)
        # floor bias weighs more on the shorter side
        assert h.mean() == pytest.approx(height * p / 4, rel=0.03)


class TestCutDepth:
    def test_full_region_gives_replicated_normalized_depth(self, pair):
        out = cut_depth(pair, Region(0, 0, pair.width, pair.height))
        expected = normalize_depth(pair.depth)
        for k in range(3):
            assert np.array_equal(out.values[:, :, k], expected)

    def test_right_column_hand_example(self):
        rgb = np.full((2, 2, 3), 0.5)
        depth = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = cut_depth(SamplePair(RgbImage(rgb), DepthMap(depth)), Region(1, 0, 1, 2)).values
        assert np.allclose(out[:, 1, :], [[1 / 3] * 3, [1.0] * 3])
        assert np.array_equal(out[:, 0, :], rgb[:, 0, :])

    def test_target_depth_untouched(self, pair):
        spec = AugmentSpec(Method.CUTDEPTH, p=1.0)
        out, _ = apply(pair, spec, RngStream(1))
        assert out.depth == pair.depth

    def test_region_must_fit(self, pair):
        with pytest.raises(RegionBoundsError):
            cut_depth(pair, Region(6, 0, 5, 1))

    def test_locality_over_many_random_pairs(self):
        rng = RngStream(77)
        for index in range(10_000):
            source = random_pair(index, width=6, height=5)
            region = sample_region(rng, 6, 5, 0.9)
            out = cut_depth(source, region).values
            changed = np.any(out != source.rgb.values, axis=2)
            outside = np.ones((5, 6), dtype=bool)
            outside[region.slices] = False
            assert not changed[outside].any()

    @settings(max_examples=200)
    @given(seed=st.integers(0, 2**32), method=st.sampled_from(REGION_METHODS))
    def test_locality(self, seed, method):
        rng = RngStream(seed)
        source = random_pair(seed % 1000, width=9, height=7)
        partner = random_pair(seed % 1000 + 1, width=9, height=7)
        region = sample_region(rng, 9, 7, 0.8)
        out = augment_region(method, source, region, AugmentSpec(method), rng, partner)

        outside = np.ones((7, 9), dtype=bool)
        outside[region.slices] = False
        assert np.array_equal(out.rgb.values[outside], source.rgb.values[outside])
        if method is Method.CUTDEPTH:
            inside = normalize_depth(source.depth)[region.slices]
            assert np.array_equal(out.rgb.values[region.slices], np.repeat(inside[..., None], 3, axis=2))


class TestComparisonMethods:
    def test_cutout_fills_with_channel_mean(self, pair):
        region = Region(1, 1, 3, 2)
        out = cut_out(pair.rgb, region)
        assert np.allclose(out.values[region.slices], pair.rgb.values.mean(axis=(0, 1)))

    def test_cutout_constant_fill(self, pair):
        region = Region(0, 0, 2, 2)
        out = cut_out(pair.rgb, region, FillMode.constant(0.0))
        assert not out.values[region.slices].any()

    def test_fill_mode_parsing(self):
        assert FillMode.parse("constant:0.25") == FillMode.constant(0.25)
        assert FillMode.parse("image-mean") == FillMode()
        with pytest.raises(ParameterError):
            FillMode.parse("constant:2")

    def test_random_erasing_uses_bulk_draws(self, pair):
        region = Region(2, 1, 3, 4)
        rng = RngStream(8)
        out = random_erasing(pair.rgb, region, rng)
        expected = RngStream(8).uniform_array((4, 3, 3))
        assert np.array_equal(out.values[region.slices], expected)
        assert rng.draws_consumed == 36

    def test_random_erasing_values_are_uniform(self):
        rgb = RgbImage(np.zeros((170, 200, 3)))
        out = random_erasing(rgb, Region(0, 0, 200, 170), RngStream(13))
        assert out.values.size >= 100_000
        assert abs(out.values.mean() - 0.5) <= 0.005

    def test_cutmix_copies_partner_region(self, pair):
        partner = random_pair(99)
        region = Region(3, 2, 4, 3)
        out = cut_mix(pair.rgb, partner.rgb, region)
        assert np.array_equal(out.values[region.slices], partner.rgb.values[region.slices])

    def test_cutmix_size_mismatch(self, pair):
        with pytest.raises(ShapeMismatchError):
            cut_mix(pair.rgb, random_pair(1, width=5).rgb, Region(0, 0, 1, 1))

    def test_cutmix_depth_mixing_flag(self, pair):
        partner = random_pair(5)
        region = Region(0, 0, 4, 4)
        image_only = augment_region(Method.CUTMIX, pair, region, AugmentSpec(Method.CUTMIX), RngStream(0), partner)
        assert image_only.depth == pair.depth
        mixed_spec = AugmentSpec(Method.CUTMIX, cutmix_mix_depth=True)
        mixed = augment_region(Method.CUTMIX, pair, region, mixed_spec, RngStream(0), partner)
        assert np.array_equal(mixed.depth.values[region.slices], partner.depth.values[region.slices])

    def test_cutmix_without_partner(self, pair):
        with pytest.raises(ParameterError):
            apply(pair, AugmentSpec(Method.CUTMIX), RngStream(0))


class TestApply:
    def test_zero_probability_leaves_input(self, pair):
        out, record = apply(pair, AugmentSpec(Method.CUTDEPTH, apply_probability=0.0), RngStream(4))
        assert out == pair
        assert record.status == "skipped"
        assert record.region is None
        assert record.n_draws == 1

    def test_method_none_is_passthrough(self, pair):
        out, record = apply(pair, AugmentSpec(Method.NONE), RngStream(4))
        assert out == pair
        assert record.status == "passthrough"

    def test_record_replays_region(self, pair):
        spec = AugmentSpec(Method.CUTDEPTH, p=0.6)
        out, record = apply(pair, spec, RngStream(31))
        gate, a, b, c, d = record.draws
        assert gate < 1.0
        assert region_from_draws(a, b, c, d, pair.width, pair.height, 0.6) == record.region

        replay, again = apply(pair, spec, RngStream(31))
        assert replay == out
        assert again.to_dict() == record.to_dict()

    def test_random_erasing_draw_count(self, pair):
        _, record = apply(pair, AugmentSpec(Method.RANDOM_ERASING), RngStream(2))
        assert record.n_draws == 5 + record.region.area * 3
        assert len(record.draws) == 5

    def test_random_erasing_fill_replays_from_seed(self, pair):
        out, record = apply(pair, AugmentSpec(Method.RANDOM_ERASING), RngStream(2))
        replay = RngStream(record.seed)
        replay.uniform_array(len(record.draws))
        fill = replay.uniform_array((record.region.h, record.region.w, 3))
        assert np.array_equal(out.rgb.values[record.region.slices], fill)


class TestBaseline:
    def test_flip_is_an_involution_on_both_planes(self, pair):
        flipped = horizontal_flip(pair)
        assert np.array_equal(flipped.depth.values[:, 0], pair.depth.values[:, -1])
        assert horizontal_flip(flipped) == pair

    def test_rotation_by_half_turn(self):
        rgb = np.zeros((2, 2, 3))
        rgb[:, :, 0] = [[0.125, 0.25], [0.5, 0.75]]
        depth = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = rotate_pair(SamplePair(RgbImage(rgb), DepthMap(depth)), 180.0, max_angle=180.0)
        assert out.depth.values.tolist() == [[4.0, 3.0], [2.0, 1.0]]
        assert np.allclose(out.rgb.values[:, :, 0], [[0.75, 0.5], [0.25, 0.125]], atol=1e-6)

    def test_zero_angle_is_identity(self, pair):
        assert rotate_pair(pair, 0.0) is pair

    def test_rotation_angle_bounds(self, pair):
        with pytest.raises(ParameterError):
            rotate_pair(pair, 3.0)
        with pytest.raises(ParameterError):
            rotate_pair(pair)

    @pytest.mark.parametrize("angle", [-2.5, 1.0, 2.5])
    def test_rotation_keeps_rgb_and_depth_aligned(self, angle):
        for seed in range(50):
            spec = SceneSpec(seed=seed)
            out = rotate_pair(generate_scene(spec), angle)
            depth = out.depth.values
            windows = np.lib.stride_tricks.sliding_window_view(depth, (5, 5))
            flat = (windows.min(axis=(2, 3)) == windows.max(axis=(2, 3))) & (windows.min(axis=(2, 3)) > 0)
            rows, cols = np.nonzero(flat)
            rows, cols = rows + 2, cols + 2
            assert rows.size > 0
            expected = scene_luminance(depth[rows, cols], spec.depth_range)
            assert np.allclose(luminance(out.rgb)[rows, cols], expected, atol=1e-5), seed

    def test_rotated_depth_keeps_input_values(self):
        source = random_pair(3, width=20, height=16)
        out = rotate_pair(source, rng=RngStream(6))
        allowed = set(source.depth.values.ravel().tolist()) | {0.0}
        assert set(out.depth.values.ravel().tolist()) <= allowed

    def test_adjust_color(self, pair):
        assert adjust_color(pair.rgb, 1.0, 1.0) == pair.rgb
        bright = adjust_color(pair.rgb, 1.0, 10.0)
        assert bright.values.max() == 1.0
        with pytest.raises(ParameterError):
            adjust_color(pair.rgb, 0.0, 1.0)

    def test_color_jitter_with_fixed_ranges(self, pair):
        rng = RngStream(0)
        out = color_jitter(pair.rgb, rng, (2.0, 2.0), (0.5, 0.5), (1.0, 1.0))
        assert np.allclose(out.values, np.clip(pair.rgb.values**2 * 0.5, 0, 1))
        assert rng.draws_consumed == 5

    def test_baseline_draw_order(self, pair):
        spec = BaselineSpec(flip_probability=1.0, color_probability=0.0, max_rotation=0.0)
        rng = RngStream(12)
        out, params = apply_baseline(pair, spec, rng)
        assert rng.draws_consumed == 3
        assert params["flip"] is True
        assert params["color"] is None
        assert out == horizontal_flip(pair)

    def test_baseline_runs_before_region_method(self, pair):
        spec = AugmentSpec(Method.CUTOUT, baseline=BaselineSpec(color_probability=1.0))
        _, record = apply(pair, spec, RngStream(40))
        # flip, rotation, gate, five jitter draws, apply gate, four region draws
        assert len(record.draws) == 13
        assert set(record.baseline) == {"flip", "angle", "color"}
