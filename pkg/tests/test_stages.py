import numpy as np
import pytest
from dataclasses import replace

import mister.stages as stg
from mister.config import Stage1Config, Stage2Config, Stage3Config, Stage4Config
from mister.image import psnr, upsample_zero_fill, downsample
from mister.numerics import ridge_solve
from mister.patches import (
    Patch,
    penalty_matrix,
    phase_indices,
    measured_indices,
    search_similar,
    synthesize_patches,
)
from mister.synthetic import periodic_tile
from conftest import random_u8, small_config


class TestStage1:
    def test_constant_everything_stays_constant(self):
        lr = np.full((10, 9), 41.0)
        guide = np.full((20, 18), 41.0)
        cfg = Stage1Config(n_a=4, n_b=4, k=3, w_a=7, w_b=7, iterations=2)
        out = stg.stage1(lr, guide, cfg, 2)
        assert np.allclose(out, 41.0, atol=1e-9)

    def test_measured_grid_exact(self):
        lr = random_u8((12, 11), 0)
        guide = random_u8((24, 22), 1)
        cfg = Stage1Config(n_a=4, n_b=4, k=3, w_a=7, w_b=7, iterations=2)
        out = stg.stage1(lr, guide, cfg, 2)
        assert np.array_equal(out[::2, ::2], lr)

    def test_planted_duplicate_reconstructed_exactly(self):
        # a 5-periodic image provides an exact phase-matched donor for every
        # phase; with k=1 and no regularization the ridge system is rank one
        # and reproduces the high-resolution patch exactly
        tile = random_u8((5, 5), 2)
        hr = periodic_tile(tile, (10, 10))
        lr = downsample(hr, 2)
        cfg = Stage1Config(n_a=8, n_b=8, k=1, w_a=11, w_b=11,
                           lambda_a=0.0, lambda_b=0.0, iterations=1)
        out = stg.stage1(lr, hr.copy(), cfg, 2)
        inner = (slice(8, -8), slice(8, -8))
        assert np.allclose(out[inner], hr[inner], atol=1e-6)

    def test_weight_guide_override_changes_result(self):
        lr = random_u8((12, 12), 3)
        guide = random_u8((24, 24), 4)
        other = random_u8((24, 24), 5)
        cfg = Stage1Config(n_a=4, n_b=4, k=3, w_a=7, w_b=7, iterations=1)
        a = stg.stage1(lr, guide, cfg, 2)
        b = stg.stage1(lr, guide, cfg, 2, weight_guide_first=other)
        assert not np.allclose(a, b)
        assert np.array_equal(b[::2, ::2], lr)

    def test_snapshot_records_first_iteration(self):
        lr = random_u8((12, 12), 6)
        guide = random_u8((24, 24), 7)
        cfg = Stage1Config(n_a=4, n_b=4, k=3, w_a=7, w_b=7, iterations=2)
        snaps = {}
        out = stg.stage1(lr, guide, cfg, 2, snapshots=snaps)
        assert "s1a" in snaps and not np.array_equal(snaps["s1a"], out)


def reference_phase_pass(z, guide, side, window, lam, c_w_rel, k, s):
    """Re-derivation of one reconstruction sweep from the public operations."""
    h, w = z.shape
    c_w_eff = c_w_rel * side * side
    oo = measured_indices(side, s)
    contribs = []
    rows = [r for r in range(0, h - side + 1, s)]
    cols = [c for c in range(0, w - side + 1, s)]
    for tr in rows:
        for tc in cols:
            phat = np.empty(side * side)
            phat[oo] = guide[tr : tr + side, tc : tc + side].ravel()[oo] * 0
            phat[oo] = z[tr : tr + side, tc : tc + side].ravel()[oo]
            for name in ("OE", "EO", "EE"):
                found = search_similar(guide, (tr, tc), side, window, k=k,
                                       metric="exp_l1", c_w=c_w_eff, phase_filter=name)
                ph_idx = phase_indices(side, name, s)
                if len(found) == 0:
                    phat[ph_idx] = guide[tr : tr + side, tc : tc + side].ravel()[ph_idx]
                    continue
                target = guide[tr : tr + side, tc : tc + side].ravel()[oo]
                dc = target.mean()
                q = np.stack([
                    guide[r : r + side, c : c + side].ravel()[oo] - dc
                    for r, c in found.origins
                ], axis=1)
                pen = np.diag(penalty_matrix(found.scores))
                lam_eff = lam * np.mean(np.sum(q * q, axis=0))
                omega = ridge_solve(q, target - dc, lam_eff, pen)
                donors = np.stack([
                    z[r : r + side, c : c + side].ravel()[ph_idx] - dc
                    for r, c in found.origins
                ], axis=1)
                phat[ph_idx] = dc + donors @ omega
            contribs.append(Patch((tr, tc), side, phat))
    out = synthesize_patches(contribs, (h, w))
    out[::s, ::s] = z[::s, ::s]
    return out


class TestPhasePassOracle:
    def test_engine_matches_public_op_composition(self):
        hr_guide = random_u8((20, 18), 8)
        lr = random_u8((10, 9), 9)
        z = upsample_zero_fill(lr, 2, (20, 18))
        got = stg._phase_pass(z, hr_guide, hr_guide, 4, 7, 0.1, 10.0, 3, 2,
                              compact_weights=True)
        want = reference_phase_pass(z, hr_guide, 4, 7, 0.1, 10.0, 3, 2)
        assert np.allclose(got, want, atol=1e-7)


class TestStage2:
    def test_constant(self):
        out = stg.stage2(np.full((16, 16), 7.0), Stage2Config(n=4, k=3, w=7, iterations=1), 2)
        assert np.allclose(out, 7.0, atol=1e-9)

    def test_measured_grid_preserved(self):
        img = random_u8((20, 20), 10)
        out = stg.stage2(img, Stage2Config(n=4, k=3, w=7, iterations=2), 2)
        assert np.array_equal(out[::2, ::2], img[::2, ::2])

    def test_full_pixel_weights_differ_from_compact(self):
        img = random_u8((20, 20), 11)
        z = np.zeros_like(img)
        z[::2, ::2] = img[::2, ::2]
        full = stg._phase_pass(z, img, img, 4, 7, 0.05, 10.0, 3, 2, compact_weights=False)
        comp = stg._phase_pass(z, img, img, 4, 7, 0.05, 10.0, 3, 2, compact_weights=True)
        assert not np.allclose(full, comp)


class TestStage3:
    def test_constant_passes_through(self):
        img = np.full((18, 18), 50.0)
        cfg = Stage3Config(n_a=4, n_b=4, k=4, w_a=7, w_b=7, iters_a=1, iters_b=1, stride=3)
        out = stg.stage3(img, cfg, 2)
        assert np.allclose(out, 50.0, atol=1e-9)

    def test_polarity_inverted_donor_gets_negative_weight(self):
        # mean-removed +edge target and a -edge donor: the regression flips
        # the donor's sign, matching the public solver on the same system
        edge = np.concatenate([np.full(8, 40.0), np.full(8, -40.0)]).reshape(4, 4)
        img = np.zeros((12, 12))
        img[0:4, 0:4] = edge
        img[0:4, 6:10] = -edge
        target = img[0:4, 0:4].ravel()
        donor = img[0:4, 6:10].ravel()
        q = np.stack([target, donor], axis=1)
        pen = np.array([1.0, 1.0 / 1e-3])  # cosine -1 clamps to the floor
        lam_eff = 0.05 * np.mean(np.sum(q * q, axis=0))
        omega = ridge_solve(q, target, lam_eff, pen)
        assert omega[1] < 0

    def test_mean_restored(self):
        img = random_u8((18, 18), 12) + 30.0
        cfg = Stage3Config(n_a=4, n_b=4, k=4, w_a=7, w_b=7, iters_a=1, iters_b=1, stride=3)
        out = stg.stage3(img, cfg, 2)
        assert abs(out.mean() - img.mean()) < 2.0


class TestStage4:
    def test_constant(self):
        lr = np.full((9, 9), 13.0)
        img = np.full((18, 18), 13.0)
        cfg = Stage4Config(n_a=4, n_b=4, k=4, w=7, iters_a=1, iters_b=1, stride=3)
        out = stg.stage4(img, lr, cfg, 2)
        assert np.allclose(out, 13.0, atol=1e-9)

    def test_measured_grid_equals_lr_bit_exact(self):
        lr = random_u8((10, 10), 13) + 0.25
        img = random_u8((20, 20), 14)
        img[::2, ::2] = lr
        cfg = Stage4Config(n_a=4, n_b=4, k=4, w=7, iters_a=1, iters_b=1, stride=3)
        out = stg.stage4(img, lr, cfg, 2)
        assert np.array_equal(out[::2, ::2], lr)

    def test_identical_group_low_variance_is_fixpoint(self):
        # constant patches have zero variance: the gate passes them through,
        # and averaging identical contributions changes nothing
        img = periodic_tile(random_u8((2, 2), 15), (8, 8))
        lr = img[::2, ::2].copy()
        cfg = Stage4Config(n_a=4, n_b=4, k=4, w=9, th_a=1e9, th_b=1e9,
                           iters_a=1, iters_b=1, stride=3)
        out = stg.stage4(img, lr, cfg, 2)
        assert np.allclose(out, img, atol=1e-9)

    def test_factor_three_rejected(self):
        with pytest.raises(ValueError, match="factor-2"):
            stg.stage4(np.ones((9, 9)), np.ones((3, 3)), Stage4Config(), 3)


class TestInterpolate:
    @pytest.mark.parametrize("factor", [2, 3])
    def test_constant_image(self, factor):
        cfg = small_config(factor)
        img = np.full((14, 13), 99.0)
        out = stg.interpolate(img, cfg)
        assert out.shape == (14 * factor, 13 * factor)
        assert np.allclose(out, 99.0, atol=1e-8)
        assert np.array_equal(out[::factor, ::factor], img)

    @pytest.mark.parametrize("factor", [2, 3])
    def test_measured_grid_exact_random(self, factor):
        cfg = small_config(factor)
        g = np.random.default_rng(16)
        for _ in range(3):
            h, w = int(g.integers(10, 16)), int(g.integers(10, 16))
            img = g.integers(0, 256, size=(h, w)).astype(np.float64)
            out = stg.interpolate(img, cfg)
            assert np.array_equal(out[::factor, ::factor], img)

    def test_stage_dumps_present(self, cfg_x2, cfg_x3):
        img = random_u8((12, 12), 17)
        _, st2 = stg.interpolate(img, cfg_x2, return_stages=True)
        assert set(st2) == {"ar", "guide", "s1a", "s1", "s2", "s3", "s4"}
        _, st3 = stg.interpolate(img, cfg_x3, return_stages=True)
        assert set(st3) == {"ar", "guide", "s1a", "s1", "s2", "s3"}

    def test_factor_three_never_runs_stage4(self, cfg_x3, monkeypatch):
        def boom(*a, **k):
            raise AssertionError("stage4 must not run for factor 3")

        monkeypatch.setattr(stg, "stage4", boom)
        img = random_u8((12, 12), 18)
        stg.interpolate(img, cfg_x3)

    def test_ec1_skips_aliasing_removal(self, cfg_x2, monkeypatch):
        def boom(*a, **k):
            raise AssertionError("ec1 must not run aliasing removal")

        monkeypatch.setattr(stg, "remove_aliasing", boom)
        cfg = cfg_x2
        cfg.guide_mode = "ec1"
        img = random_u8((12, 12), 19)
        out = stg.interpolate(img, cfg)
        assert out.shape == (24, 24)

    def test_guide_modes_all_run(self, cfg_x2):
        img = random_u8((12, 12), 20)
        results = {}
        for mode in ("mister", "ec1", "ec2", "ec3", "ec4"):
            cfg = small_config(2)
            cfg.guide_mode = mode
            results[mode] = stg.interpolate(img, cfg)
        assert not np.allclose(results["mister"], results["ec1"])

    def test_deterministic(self, cfg_x2):
        img = random_u8((13, 12), 21)
        a = stg.interpolate(img, cfg_x2)
        b = stg.interpolate(img, cfg_x2)
        assert np.array_equal(a, b)


class TestBenchmark:
    def test_rows_and_average(self, tmp_path, cfg_x2):
        from mister.image import save_image

        g = np.random.default_rng(22)
        for name in ("b.pgm", "a.pgm"):
            save_image(g.integers(0, 256, size=(14, 14)).astype(float), tmp_path / name)
        rows = stg.benchmark(tmp_path, 2, cfg_x2)
        assert [r[0] for r in rows] == ["a.pgm", "b.pgm", "AVERAGE"]
        assert rows[2][1] == pytest.approx(np.mean([rows[0][1], rows[1][1]]))
        assert rows[2][2] == pytest.approx(np.mean([rows[0][2], rows[1][2]]))

    def test_constant_image_is_inf(self, tmp_path, cfg_x2):
        from mister.image import save_image

        save_image(np.full((12, 12), 128.0), tmp_path / "c.pgm")
        rows = stg.benchmark(tmp_path, 2, cfg_x2)
        assert rows[0][1] == np.inf and rows[0][2] == np.inf
        assert rows[1][1] == np.inf

    def test_unreadable_skipped_with_warning(self, tmp_path, cfg_x2):
        from mister.image import save_image

        save_image(random_u8((12, 12), 23), tmp_path / "ok.pgm")
        (tmp_path / "bad.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
        with pytest.warns(UserWarning, match="bad.pgm"):
            rows = stg.benchmark(tmp_path, 2, cfg_x2)
        assert [r[0] for r in rows] == ["ok.pgm", "AVERAGE"]

    def test_empty_dir_rejected(self, tmp_path, cfg_x2):
        with pytest.raises(ValueError, match="no .*images"):
            stg.benchmark(tmp_path, 2, cfg_x2)
