"""Tests for the synthetic generator, the grid oracle, and dataset files."""

import math

import numpy as np
import pytest

from pedorient.geometry import (
    Dims3D,
    candidates_for_span,
    circ_abs_diff,
    implied_width_span,
    width_span,
    width_span_abs,
)
from pedorient.synth import (
    SynthConfig,
    brute_force_orientation_oracle,
    gen_dataset,
    oracle_candidates_for_span,
    read_dataset,
    write_dataset,
)


class TestSynthConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(n=-1)
        with pytest.raises(ValueError):
            SynthConfig(n=1, context_noise=1.5)
        with pytest.raises(ValueError):
            SynthConfig(n=1, context_width=2)
        with pytest.raises(ValueError):
            SynthConfig(n=1, box_noise_sd=-0.1)
        with pytest.raises(ValueError):
            SynthConfig(n=1, h1_range=(2.0, 1.0))


class TestGenDataset:
    def test_deterministic_per_seed(self):
        a, ra = gen_dataset(SynthConfig(n=20, seed=5))
        b, rb = gen_dataset(SynthConfig(n=20, seed=5))
        c, _ = gen_dataset(SynthConfig(n=20, seed=6))
        for sa, sb in zip(a, b):
            assert sa.dims2d == sb.dims2d
            assert sa.theta == sb.theta
            assert np.array_equal(sa.context, sb.context)
        assert ra == rb
        assert any(x.theta != y.theta for x, y in zip(a, c))

    def test_prefix_stability(self):
        # Sample i depends only on (seed, i), so growing n keeps a prefix.
        small, _ = gen_dataset(SynthConfig(n=5, seed=3))
        big, _ = gen_dataset(SynthConfig(n=10, seed=3))
        for s, b in zip(small, big):
            assert s.dims2d == b.dims2d and s.theta == b.theta

    def test_field_ranges(self):
        cfg = SynthConfig(n=300, seed=0)
        samples, records = gen_dataset(cfg)
        assert len(samples) == len(records) == 300
        for s, r in zip(samples, records):
            assert cfg.h1_range[0] <= s.dims3d.h1 <= cfg.h1_range[1]
            assert cfg.w1_range[0] <= s.dims3d.w1 <= cfg.w1_range[1]
            assert cfg.l1_range[0] <= s.dims3d.l1 <= cfg.l1_range[1]
            assert -math.pi < s.theta <= math.pi
            assert cfg.scale_range[0] <= r.scale <= cfg.scale_range[1]
            assert s.dims2d.h > 0 and s.dims2d.w > 0
            assert s.context.shape == (cfg.context_width,)

    def test_noiseless_boxes_are_exact_projections(self):
        cfg = SynthConfig(n=100, seed=0, box_noise_sd=0.0)
        samples, records = gen_dataset(cfg)
        for s, r in zip(samples, records):
            assert r.span == pytest.approx(width_span(s.dims3d, s.theta))
            assert s.dims2d.h == pytest.approx(r.scale * s.dims3d.h1)
            assert s.dims2d.w == pytest.approx(r.scale * r.span)
            implied = implied_width_span(s.dims2d, s.dims3d.h1)
            assert implied == pytest.approx(r.span, abs=1e-12)

    def test_noisy_boxes_stay_positive(self):
        cfg = SynthConfig(n=200, seed=0, box_noise_sd=50.0)
        samples, _ = gen_dataset(cfg)
        for s in samples:
            assert s.dims2d.h >= 0.5 and s.dims2d.w >= 0.5

    def test_clean_context_encodes_orientation(self):
        cfg = SynthConfig(n=100, seed=0, context_noise=0.0)
        samples, _ = gen_dataset(cfg)
        cells = cfg.context_width - 2
        for s in samples:
            onehot = s.context[:cells]
            assert onehot.sum() == 1.0
            cell = int(np.argmax(onehot))
            want = min(int((s.theta + math.pi) / (2 * math.pi) * cells), cells - 1)
            assert cell == want
            assert s.context[cells] == pytest.approx(math.sin(s.theta))
            assert s.context[cells + 1] == pytest.approx(math.cos(s.theta))

    def test_pure_noise_context_is_uninformative(self):
        cfg = SynthConfig(n=400, seed=0, context_noise=1.0)
        samples, _ = gen_dataset(cfg)
        cells = cfg.context_width - 2
        # Trig channels carry zero gain at full noise; the one-hot cell is
        # rerolled away from the truth with probability 1.
        hits = 0
        for s in samples:
            want = min(int((s.theta + math.pi) / (2 * math.pi) * cells), cells - 1)
            hits += int(np.argmax(s.context[:cells]) == want)
        assert hits == 0

    def test_empty_dataset(self):
        samples, records = gen_dataset(SynthConfig(n=0))
        assert samples == [] and records == []


class TestGridOracle:
    def test_matches_analytic_candidates(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            dims = Dims3D(rng.uniform(1.4, 2.0), rng.uniform(0.3, 0.9),
                          rng.uniform(0.2, 0.9))
            theta = rng.uniform(-math.pi, math.pi)
            target = width_span_abs(dims, theta)
            got = oracle_candidates_for_span(dims, target)
            want = candidates_for_span(dims, target).candidates
            assert len(got) == len(want)
            for g, w in zip(got, want):
                assert circ_abs_diff(g, w) < math.radians(0.01)

    def test_unreachable_target_empty(self):
        dims = Dims3D(1.7, 0.6, 0.5)
        assert oracle_candidates_for_span(dims, 2.0) == []

    def test_from_boxes_wrapper(self):
        dims = Dims3D(1.7, 0.6, 0.5)
        theta = 2.4
        h = 120.0
        w = h * width_span_abs(dims, theta) / dims.h1
        got = brute_force_orientation_oracle((h, w), dims)
        assert any(circ_abs_diff(g, theta) < math.radians(0.01) for g in got)

    def test_grid_step_validation(self):
        with pytest.raises(ValueError):
            oracle_candidates_for_span(Dims3D(1.7, 0.6, 0.5), 0.5, grid_step=0.0)


class TestDatasetFiles:
    def test_write_read_roundtrip(self, tmp_path):
        samples, _ = gen_dataset(SynthConfig(n=25, seed=1))
        path = tmp_path / "data.txt"
        write_dataset(path, samples)
        back = read_dataset(path)
        assert len(back) == len(samples)
        for s, b in zip(samples, back):
            assert b.dims2d == s.dims2d
            assert b.dims3d == s.dims3d
            assert b.theta == s.theta
            assert np.array_equal(b.context, s.context)

    def test_header_and_blank_lines_skipped(self, tmp_path):
        samples, _ = gen_dataset(SynthConfig(n=2, seed=0))
        path = tmp_path / "data.txt"
        write_dataset(path, samples)
        text = path.read_text()
        assert text.startswith("#")
        path.write_text("\n" + text + "\n# trailing comment\n")
        assert len(read_dataset(path)) == 2

    def test_malformed_rows_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1.0 2.0 3.0\n")
        with pytest.raises(ValueError, match="line 1"):
            read_dataset(path)
        path.write_text("90 40 1.7 0.6 0.5 x 0 0 0\n")
        with pytest.raises(ValueError, match="non-numeric"):
            read_dataset(path)
