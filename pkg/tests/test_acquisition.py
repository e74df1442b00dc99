"""Phantom, k-space simulation, and sampling mask behavior."""

import math

import numpy as np
import pytest

from cloudmri.acquisition import (
    InfeasibleBudget,
    NonSquareImage,
    SHEPP_LOGAN_ELLIPSES,
    SizeTooSmall,
    apply_mask,
    forward_kspace,
    generate_phantom,
    kspace_from_dataset,
    make_mask,
    mask_from_spec,
    simulated_dataset,
    unitary_idft2,
)


def ellipse_sum_at(x: float, y: float) -> float:
    """Analytic phantom value: sum of intensities of ellipses containing the
    point, clipped like the raster."""
    total = 0.0
    for intensity, a, b, x0, y0, phi_deg in SHEPP_LOGAN_ELLIPSES:
        phi = math.radians(phi_deg)
        xr = (x - x0) * math.cos(phi) + (y - y0) * math.sin(phi)
        yr = (y - y0) * math.cos(phi) - (x - x0) * math.sin(phi)
        if (xr / a) ** 2 + (yr / b) ** 2 <= 1.0:
            total += intensity
    return min(max(total, 0.0), 1.0)


class TestPhantom:
    def test_pixels_in_unit_interval(self):
        for n in (8, 65, 128):
            img = generate_phantom(n)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_deterministic(self):
        assert generate_phantom(128).tobytes() == generate_phantom(128).tobytes()

    def test_center_exceeds_corner_via_analytic_membership(self):
        n = 128
        img = generate_phantom(n)
        half = (n - 1) / 2.0
        cx = (n // 2 - half) / half
        center_expected = ellipse_sum_at(cx, -cx)
        corner_expected = ellipse_sum_at(-1.0, 1.0)
        assert img[n // 2, n // 2] == pytest.approx(center_expected)
        assert img[0, 0] == pytest.approx(corner_expected)
        assert img[n // 2, n // 2] > img[0, 0]

    def test_size_floor(self):
        with pytest.raises(SizeTooSmall):
            generate_phantom(7)


class TestForwardKspace:
    def test_dc_bin_equals_scaled_pixel_sum(self):
        img = generate_phantom(64)
        k = forward_kspace(img)
        assert k[32, 32] == pytest.approx(img.sum() / 64, abs=1e-10)

    def test_inverse_reproduces_image(self):
        img = generate_phantom(32)
        back = unitary_idft2(forward_kspace(img))
        assert np.abs(back - img).max() < 1e-10

    def test_parseval_by_double_sum(self):
        img = generate_phantom(48)
        k = forward_kspace(img)
        kspace_energy = sum(abs(v) ** 2 for v in k.ravel())
        pixel_energy = sum(float(v) ** 2 for v in img.ravel())
        assert kspace_energy == pytest.approx(pixel_energy, rel=1e-8)

    def test_noise_is_seeded(self):
        img = generate_phantom(16)
        a = forward_kspace(img, noise_sigma=0.1, seed=5)
        b = forward_kspace(img, noise_sigma=0.1, seed=5)
        c = forward_kspace(img, noise_sigma=0.1, seed=6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_rejects_non_square(self):
        with pytest.raises(NonSquareImage):
            forward_kspace(np.zeros((4, 6)))


class TestMasks:
    def test_full(self):
        assert make_mask("full", 32).sampled.all()

    def test_uniform_count(self):
        mask = make_mask("uniform_lines", 128, acceleration=4)
        assert mask.n_sampled == 32
        assert mask.sampled[::4].all()

    def test_center_block_and_budget(self):
        mask = make_mask("random_lines_center", 128, acceleration=4,
                         center_fraction=0.08, seed=0)
        assert mask.sampled[59:69].all()
        assert mask.n_sampled == 32

    def test_sampling_ratio_matches_budget(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(16, 257))
            r = float(rng.uniform(1.0, 8.0))
            c = float(rng.uniform(0.0, 1.0 / r))
            mask = make_mask("random_lines_center", n, acceleration=r,
                             center_fraction=c, seed=int(rng.integers(0, 2**32)))
            assert mask.n_sampled == round(n / r)

    def test_seed_determinism_and_divergence(self):
        base = make_mask("random_lines_center", 128, 4, 0.08, seed=9)
        same = make_mask("random_lines_center", 128, 4, 0.08, seed=9)
        assert np.array_equal(base.sampled, same.sampled)
        differing = sum(
            not np.array_equal(
                base.sampled,
                make_mask("random_lines_center", 128, 4, 0.08, seed=s).sampled,
            )
            for s in range(100, 200)
        )
        assert differing >= 99

    def test_infeasible_budget(self):
        with pytest.raises(InfeasibleBudget):
            make_mask("random_lines_center", 128, acceleration=64, center_fraction=0.5)

    def test_spec_round_trip(self):
        mask = make_mask("random_lines_center", 64, 2, 0.1, seed=4)
        again = mask_from_spec(mask.spec_dict())
        assert np.array_equal(mask.sampled, again.sampled)


class TestContainerBridge:
    def test_simulated_dataset_round_trips_to_kspace(self):
        dataset = simulated_dataset(16)
        grid = kspace_from_dataset(dataset)
        img = generate_phantom(16)
        expected = forward_kspace(img)
        # complex64 storage quantizes; agreement is to float32 precision
        assert np.abs(grid - expected).max() < 1e-5

    def test_missing_lines_stay_zero(self):
        dataset = simulated_dataset(16)
        dataset.acquisitions = dataset.acquisitions[:4]
        grid = kspace_from_dataset(dataset)
        assert np.count_nonzero(grid[4:, :]) == 0

    def test_apply_mask_zeroes_rows(self):
        k = forward_kspace(generate_phantom(16))
        mask = make_mask("uniform_lines", 16, acceleration=2)
        masked = apply_mask(k, mask)
        assert np.count_nonzero(masked[1::2, :]) == 0
        assert np.array_equal(masked[::2, :], k[::2, :])
