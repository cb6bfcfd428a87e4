"""Per-pixel ray maps: embedding, resampling, and the binary raster."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epirays import (Intrinsics, PluckerMap, Pose, downsample, plucker_embed,
                     read_plucker, write_plucker)

from conftest import pose_from


def embed_oracle(pose: Pose, intr: Intrinsics, h: int, w: int) -> np.ndarray:
    """Scalar per-pixel oracle built directly from the projection model."""
    k = intr if (intr.height == h and intr.width == w) else intr.scaled(h, w)
    out = np.zeros((h, w, 6))
    for y in range(h):
        for x in range(w):
            d_cam = np.array([(x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0])
            d = pose.R @ d_cam
            d = d / np.linalg.norm(d)
            out[y, x, :3] = np.cross(pose.t, d)
            out[y, x, 3:] = d
    return out


def bilinear_oracle(img: np.ndarray, x: float, y: float) -> np.ndarray:
    """Naive bilinear interpolation at a continuous pixel coordinate."""
    h, w = img.shape[:2]
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    return ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
            + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))


class TestPluckerMap:
    def test_rejects_non_unit_direction(self):
        data = np.zeros((2, 2, 6))
        data[..., 3] = 2.0
        with pytest.raises(ValueError):
            PluckerMap(data)

    def test_rejects_non_orthogonal_moment(self):
        data = np.zeros((2, 2, 6))
        data[..., 5] = 1.0
        data[..., 2] = 0.5  # moment parallel to direction
        with pytest.raises(ValueError):
            PluckerMap(data)

    def test_accessors(self):
        data = np.zeros((3, 4, 6))
        data[..., 5] = 1.0
        m = PluckerMap(data)
        assert m.h == 3 and m.w == 4
        assert m.moment.shape == (3, 4, 3)
        assert m.direction.shape == (3, 4, 3)


class TestEmbed:
    def test_identity_pose_zero_moments(self, small_intrinsics):
        m = plucker_embed(Pose.identity(), small_intrinsics, 16, 16)
        assert np.count_nonzero(m.moment) == 0

    def test_hand_value_at_principal_point(self):
        intr = Intrinsics(fx=10.0, fy=10.0, cx=4.0, cy=4.0, width=9, height=9)
        pose = Pose(np.eye(3), np.array([1.0, 0.0, 0.0]))
        m = plucker_embed(pose, intr, 9, 9)
        np.testing.assert_allclose(m.direction[4, 4], [0.0, 0.0, 1.0],
                                   atol=1e-15)
        # (1,0,0) x (0,0,1) = (0,-1,0)
        np.testing.assert_allclose(m.moment[4, 4], [0.0, -1.0, 0.0],
                                   atol=1e-15)

    def test_matches_scalar_oracle(self, rng, small_intrinsics):
        pose = pose_from(rng)
        m = plucker_embed(pose, small_intrinsics, 16, 16)
        want = embed_oracle(pose, small_intrinsics, 16, 16)
        np.testing.assert_allclose(m.data, want, atol=1e-10)

    def test_rescales_to_target_grid(self, rng):
        intr = Intrinsics(fx=100.0, fy=100.0, cx=31.5, cy=31.5,
                          width=64, height=64)
        pose = pose_from(rng)
        m = plucker_embed(pose, intr, 16, 16)
        assert m.h == 16 and m.w == 16
        want = embed_oracle(pose, intr, 16, 16)
        np.testing.assert_allclose(m.data, want, atol=1e-10)

    def test_invariants_hold(self, rng, small_intrinsics):
        m = plucker_embed(pose_from(rng), small_intrinsics, 16, 16)
        norms = np.linalg.norm(m.direction, axis=-1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        dots = np.sum(m.moment * m.direction, axis=-1)
        np.testing.assert_allclose(dots, 0.0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31), alpha=st.floats(-100.0, 100.0))
    def test_origin_shift_invariance(self, seed, alpha):
        # sliding the origin along the ray leaves (m, d) untouched
        gen = np.random.default_rng(seed)
        intr = Intrinsics(fx=30.0, fy=30.0, cx=3.5, cy=3.5, width=8, height=8)
        pose = pose_from(gen)
        m = plucker_embed(pose, intr, 8, 8)
        shifted_o = pose.t[None, None, :] + alpha * m.direction
        shifted_m = np.cross(shifted_o, m.direction)
        assert np.max(np.abs(shifted_m - m.moment)) < 1e-9 * max(
            1.0, abs(alpha))


class TestDownsample:
    def test_same_size_is_identity(self, rng, small_intrinsics):
        m = plucker_embed(pose_from(rng), small_intrinsics, 16, 16)
        out = downsample(m, 16, 16)
        np.testing.assert_allclose(out.data, m.data, atol=1e-12)

    def test_constant_map_stays_constant(self):
        d = np.array([0.0, 0.6, 0.8])
        mom = np.cross(np.array([1.0, 2.0, 3.0]), d)
        data = np.broadcast_to(np.concatenate([mom, d]), (8, 8, 6)).copy()
        out = downsample(PluckerMap(data), 4, 4)
        np.testing.assert_allclose(out.data,
                                   np.broadcast_to(np.concatenate([mom, d]),
                                                   (4, 4, 6)),
                                   atol=1e-12)

    def test_matches_scalar_bilinear_oracle(self, rng):
        intr = Intrinsics(fx=20.0, fy=22.0, cx=3.5, cy=3.5, width=8, height=8)
        m = plucker_embed(pose_from(rng), intr, 8, 8)
        out = downsample(m, 4, 4)
        sx, sy = 8 / 4, 8 / 4
        for y2 in range(4):
            for x2 in range(4):
                # align-corners-false source coordinate
                xs = (x2 + 0.5) * sx - 0.5
                ys = (y2 + 0.5) * sy - 0.5
                raw = bilinear_oracle(m.data, xs, ys)
                d = raw[3:] / np.linalg.norm(raw[3:])
                mm = raw[:3] - np.dot(raw[:3], d) * d
                np.testing.assert_allclose(out.data[y2, x2],
                                           np.concatenate([mm, d]),
                                           atol=1e-10)

    def test_output_satisfies_invariants(self, rng, small_intrinsics):
        m = plucker_embed(pose_from(rng), small_intrinsics, 16, 16)
        out = downsample(m, 5, 7)
        norms = np.linalg.norm(out.direction, axis=-1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        dots = np.sum(out.moment * out.direction, axis=-1)
        np.testing.assert_allclose(dots, 0.0, atol=1e-12)

    def test_rejects_upsample(self, rng, small_intrinsics):
        m = plucker_embed(pose_from(rng), small_intrinsics, 8, 8)
        with pytest.raises(ValueError):
            downsample(m, 16, 16)


class TestRasterIO:
    def test_round_trip_header_and_values(self, rng, small_intrinsics,
                                          tmp_path):
        m = plucker_embed(pose_from(rng), small_intrinsics, 16, 16)
        path = tmp_path / "m.plk"
        write_plucker(m, path)
        raw = path.read_bytes()
        assert raw.startswith(b"PLK1 16 16\n")
        back = read_plucker(path)
        assert back.h == 16 and back.w == 16
        # float32 storage: values round-trip at single precision
        np.testing.assert_allclose(back.data, m.data, atol=1e-5)

    def test_read_restores_invariants(self, rng, small_intrinsics, tmp_path):
        m = plucker_embed(pose_from(rng), small_intrinsics, 16, 16)
        path = tmp_path / "m.plk"
        write_plucker(m, path)
        back = read_plucker(path)
        norms = np.linalg.norm(back.direction, axis=-1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)
        dots = np.sum(back.moment * back.direction, axis=-1)
        np.testing.assert_allclose(dots, 0.0, atol=1e-9)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.plk"
        path.write_bytes(b"NOPE 2 2\n" + b"\x00" * (2 * 2 * 6 * 4))
        with pytest.raises(ValueError):
            read_plucker(path)

    def test_rejects_truncated_payload(self, tmp_path):
        path = tmp_path / "short.plk"
        path.write_bytes(b"PLK1 2 2\n" + b"\x00" * 8)
        with pytest.raises(ValueError):
            read_plucker(path)
