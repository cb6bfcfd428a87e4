"""Fundamental matrices, line clipping, and per-pixel line sampling."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epirays import (DegenerateGeometryError, DegenerateLineError,
                     FundamentalMatrix, Intrinsics, Pose, Trajectory,
                     build_epipolar_geometry, clip_to_image, epipolar_line,
                     epipole, fundamental_matrix, relative_pose, sample_line)
from epirays.epipolar import default_sample_count

from conftest import axis_rotation, pose_from


def project_pixel(pose: Pose, intr: Intrinsics, point: np.ndarray) -> np.ndarray:
    """Independent projection oracle, world point to pixel."""
    x_cam = pose.R.T @ (point - pose.t)
    return np.array([
        intr.fx * x_cam[0] / x_cam[2] + intr.cx,
        intr.fy * x_cam[1] / x_cam[2] + intr.cy,
    ])


def visible_points(src: Pose, tgt: Pose, intr: Intrinsics, count: int,
                   rng: np.random.Generator) -> np.ndarray:
    """World points that project inside both image rectangles."""
    pts = []
    while len(pts) < count:
        u = rng.uniform(0, intr.width - 1)
        v = rng.uniform(0, intr.height - 1)
        depth = rng.uniform(1.0, 8.0)
        d_cam = np.array([(u - intr.cx) / intr.fx,
                          (v - intr.cy) / intr.fy, 1.0])
        point = tgt.t + depth * (tgt.R @ d_cam)
        x_src = src.R.T @ (point - src.t)
        if x_src[2] <= 0.1:
            continue
        uv = project_pixel(src, intr, point)
        if 0 <= uv[0] <= intr.width - 1 and 0 <= uv[1] <= intr.height - 1:
            pts.append(point)
    return np.array(pts)


def nearby_pose(rng: np.random.Generator) -> Pose:
    """Small relative motion keeping shared visibility likely."""
    angle = rng.uniform(-0.2, 0.2, size=3)
    r = (axis_rotation(0, angle[0]) @ axis_rotation(1, angle[1])
         @ axis_rotation(2, angle[2]))
    t = rng.uniform(-0.5, 0.5, size=3)
    if np.linalg.norm(t) < 1e-3:
        t = np.array([0.3, 0.0, 0.0])
    return Pose(r, t)


class TestFundamentalMatrix:
    def test_rank_two_enforced(self):
        with pytest.raises(ValueError):
            FundamentalMatrix(np.eye(3))

    def test_pure_rotation_rejected(self, small_intrinsics):
        rel = Pose(axis_rotation(1, 0.3), np.zeros(3))
        with pytest.raises(DegenerateGeometryError):
            fundamental_matrix(rel, small_intrinsics, small_intrinsics)

    def test_rectified_stereo_lines_horizontal(self):
        intr = Intrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=11, height=11)
        rel = Pose(np.eye(3), np.array([1.0, 0.0, 0.0]))
        f = fundamental_matrix(rel, intr, intr)
        for y in (0.0, 2.5, 7.0):
            a, b, c = epipolar_line(f, 3.0, y)
            assert abs(a) < 1e-12
            assert abs(abs(b) - 1.0) < 1e-12
            # line passes through (anything, y)
            assert abs(b * y + c) < 1e-9

    def test_translation_scale_drops_out(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        rel10 = Pose(rel.R, rel.t * 10.0)
        f1 = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
        f2 = fundamental_matrix(rel10, small_intrinsics, small_intrinsics)
        np.testing.assert_allclose(f1.normalized(), f2.normalized(),
                                   atol=1e-10)

    def test_projected_points_have_small_residual(self, rng,
                                                  small_intrinsics):
        src = pose_from(rng, t_scale=0.3)
        rel = nearby_pose(rng)
        tgt = src.compose(rel)
        f = fundamental_matrix(relative_pose(src, tgt), small_intrinsics,
                               small_intrinsics)
        for point in visible_points(src, tgt, small_intrinsics, 100, rng):
            uv_t = project_pixel(tgt, small_intrinsics, point)
            uv_s = project_pixel(src, small_intrinsics, point)
            a, b, c = epipolar_line(f, uv_t[0], uv_t[1])
            assert abs(a * uv_s[0] + b * uv_s[1] + c) < 1e-6

    def test_constructed_f_is_rank_two(self, rng, small_intrinsics):
        for _ in range(20):
            rel = nearby_pose(rng)
            f = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
            s = np.linalg.svd(f.matrix, compute_uv=False)
            assert s[2] / s[0] < 1e-8


class TestEpipole:
    def test_epipole_matches_projected_center(self, rng, small_intrinsics):
        src = Pose.identity()
        rel = nearby_pose(rng)
        # the epipole is the target camera center seen from the source
        want = project_pixel(src, small_intrinsics, rel.t)
        got = epipole(rel, small_intrinsics)
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_motion_parallel_to_image_plane_is_infinite(self,
                                                        small_intrinsics):
        rel = Pose(np.eye(3), np.array([1.0, 0.0, 0.0]))
        assert epipole(rel, small_intrinsics) is None

    def test_every_line_passes_through_epipole(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        if abs(rel.t[2]) < 1e-3:
            rel = Pose(rel.R, rel.t + np.array([0.0, 0.0, 0.5]))
        f = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
        e = epipole(rel, small_intrinsics)
        for _ in range(25):
            x, y = rng.uniform(0, 15, size=2)
            a, b, c = epipolar_line(f, x, y)
            assert abs(a * e[0] + b * e[1] + c) < 1e-8

    def test_line_matches_two_point_construction(self, rng,
                                                 small_intrinsics):
        src = Pose.identity()
        rel = nearby_pose(rng)
        if abs(rel.t[2]) < 1e-3:
            rel = Pose(rel.R, rel.t + np.array([0.0, 0.0, 0.5]))
        tgt = src.compose(rel)
        f = fundamental_matrix(relative_pose(src, tgt), small_intrinsics,
                               small_intrinsics)
        e = epipole(rel, small_intrinsics)
        point = visible_points(src, tgt, small_intrinsics, 1, rng)[0]
        uv_t = project_pixel(tgt, small_intrinsics, point)
        uv_s = project_pixel(src, small_intrinsics, point)
        # oracle: the join of two known points on the line
        join = np.cross(np.array([e[0], e[1], 1.0]),
                        np.array([uv_s[0], uv_s[1], 1.0]))
        join = join / np.hypot(join[0], join[1])
        if join[0] < 0 or (join[0] == 0 and join[1] < 0):
            join = -join
        got = epipolar_line(f, uv_t[0], uv_t[1])
        np.testing.assert_allclose(got, join, atol=1e-8)


class TestEpipolarLine:
    def test_unit_normal(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        f = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
        for _ in range(20):
            a, b, _ = epipolar_line(f, *rng.uniform(0, 15, size=2))
            assert abs(np.hypot(a, b) - 1.0) < 1e-12

    def test_sign_convention(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        f = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
        for _ in range(20):
            a, b, _ = epipolar_line(f, *rng.uniform(0, 15, size=2))
            assert a > 0 or (a == 0 and b > 0)

    def test_pixel_at_epipole_degenerates(self, small_intrinsics):
        # forward motion: the target-frame epipole is the principal point,
        # and that pixel maps to the zero line
        rel = Pose(np.eye(3), np.array([0.0, 0.0, 1.0]))
        f = fundamental_matrix(rel, small_intrinsics, small_intrinsics)
        with pytest.raises(DegenerateLineError):
            epipolar_line(f, small_intrinsics.cx, small_intrinsics.cy)


class TestClipToImage:
    def test_horizontal_line_full_span(self):
        seg = clip_to_image(np.array([0.0, 1.0, -4.0]), 9, 9)
        e0, e1 = seg
        np.testing.assert_allclose(e0, [0.0, 4.0], atol=1e-12)
        np.testing.assert_allclose(e1, [8.0, 4.0], atol=1e-12)

    def test_line_outside_misses(self):
        assert clip_to_image(np.array([0.0, 1.0, 5.0]), 8, 8) is None
        assert clip_to_image(np.array([0.0, 1.0, -20.0]), 8, 8) is None

    def test_diagonal_endpoints_on_boundary_and_line(self, rng):
        for _ in range(50):
            theta = rng.uniform(0, np.pi)
            a, b = np.cos(theta), np.sin(theta)
            c = rng.uniform(-12, 12)
            seg = clip_to_image(np.array([a, b, c]), 16, 16)
            if seg is None:
                continue
            for p in seg:
                assert -1e-9 <= p[0] <= 15 + 1e-9
                assert -1e-9 <= p[1] <= 15 + 1e-9
                on_edge = (min(abs(p[0]), abs(p[0] - 15), abs(p[1]),
                               abs(p[1] - 15)) < 1e-9)
                assert on_edge
                assert abs(a * p[0] + b * p[1] + c) < 1e-9

    def test_epipole_orders_endpoints(self):
        line = np.array([0.0, 1.0, -4.0])
        epi = np.array([20.0, 4.0])
        e0, e1 = clip_to_image(line, 9, 9, epi=epi)
        # endpoint nearest the epipole comes first
        assert np.linalg.norm(e0 - epi) <= np.linalg.norm(e1 - epi)
        np.testing.assert_allclose(e0, [8.0, 4.0], atol=1e-12)

    def test_lexicographic_order_without_epipole(self):
        e0, e1 = clip_to_image(np.array([0.0, 1.0, -4.0]), 9, 9)
        assert (e0[0], e0[1]) <= (e1[0], e1[1])

    @settings(max_examples=60, deadline=None)
    @given(theta=st.floats(0.0, np.pi), c=st.floats(-30.0, 30.0))
    def test_clip_properties(self, theta, c):
        a, b = np.cos(theta), np.sin(theta)
        seg = clip_to_image(np.array([a, b, c]), 12, 10)
        if seg is None:
            return
        for p in seg:
            assert -1e-9 <= p[0] <= 11 + 1e-9
            assert -1e-9 <= p[1] <= 9 + 1e-9
            assert abs(a * p[0] + b * p[1] + c) < 1e-9


class TestSampleLine:
    def test_uniform_integer_spacing(self):
        seg = (np.array([0.0, 0.0]), np.array([10.0, 0.0]))
        s = sample_line(seg, 11)
        np.testing.assert_allclose(s.points[:, 0], np.arange(11.0),
                                   atol=1e-12)
        np.testing.assert_allclose(s.points[:, 1], 0.0, atol=0)
        assert s.valid.all()

    def test_two_samples_are_endpoints(self):
        seg = (np.array([1.0, 2.0]), np.array([5.0, 7.0]))
        s = sample_line(seg, 2)
        np.testing.assert_allclose(s.points, [[1.0, 2.0], [5.0, 7.0]],
                                   atol=0)

    def test_constant_spacing(self, rng):
        seg = (rng.uniform(0, 8, size=2), rng.uniform(0, 8, size=2))
        s = sample_line(seg, 32)
        gaps = np.linalg.norm(np.diff(s.points, axis=0), axis=1)
        assert np.max(gaps) - np.min(gaps) < 1e-10

    def test_rejects_single_sample(self):
        with pytest.raises(ValueError):
            sample_line((np.zeros(2), np.ones(2)), 1)


class TestBuildGeometry:
    def _trajectory(self, rel: Pose, intr: Intrinsics) -> Trajectory:
        return Trajectory(poses=(Pose.identity(), rel), intrinsics=intr)

    def test_default_sample_count(self):
        assert default_sample_count(16, 24) == 24
        assert default_sample_count(24, 16) == 24

    def test_rectified_case_samples_stay_on_row(self, small_intrinsics):
        rel = Pose(np.eye(3), np.array([0.4, 0.0, 0.0]))
        g = build_epipolar_geometry(self._trajectory(rel, small_intrinsics),
                                    2, 16, 16)
        assert not g.degenerate
        ys = np.repeat(np.arange(16.0), 16)
        for pix in range(256):
            row = g.points[pix][g.valid[pix]]
            np.testing.assert_allclose(row[:, 1], ys[pix], atol=1e-9)

    def test_missing_lines_marked_invalid(self, small_intrinsics):
        rel = Pose(axis_rotation(1, 1.2), np.array([0.5, 0.0, 0.0]))
        g = build_epipolar_geometry(self._trajectory(rel, small_intrinsics),
                                    2, 16, 16)
        dead = (~g.valid).all(axis=1)
        assert dead.any() and not dead.all()

    def test_valid_points_inside_bounds(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        g = build_epipolar_geometry(self._trajectory(rel, small_intrinsics),
                                    2, 16, 16)
        pts = g.points[g.valid]
        assert np.all(pts[:, 0] >= -1e-9) and np.all(pts[:, 0] <= 15 + 1e-9)
        assert np.all(pts[:, 1] >= -1e-9) and np.all(pts[:, 1] <= 15 + 1e-9)

    def test_matches_scalar_path(self, rng, small_intrinsics):
        # the batch path must agree with the one-pixel functions
        rel = nearby_pose(rng)
        traj = self._trajectory(rel, small_intrinsics)
        g = build_epipolar_geometry(traj, 2, 16, 16, l=12)
        f = fundamental_matrix(relative_pose(traj.poses[0], traj.poses[1]),
                               small_intrinsics, small_intrinsics)
        epi = epipole(rel, small_intrinsics)
        for pix in (0, 37, 100, 255):
            x, y = pix % 16, pix // 16
            try:
                line = epipolar_line(f, float(x), float(y))
            except DegenerateLineError:
                continue
            seg = clip_to_image(line, 16, 16, epi=epi)
            if seg is None:
                assert not g.valid[pix].any()
                continue
            want = sample_line(seg, 12)
            np.testing.assert_allclose(g.points[pix], want.points,
                                       atol=1e-9)

    def test_projected_point_near_some_sample(self, rng, small_intrinsics):
        src = Pose.identity()
        rel = nearby_pose(rng)
        tgt = src.compose(rel)
        traj = self._trajectory(rel, small_intrinsics)
        g = build_epipolar_geometry(traj, 2, 16, 16, l=32)
        for point in visible_points(src, tgt, small_intrinsics, 10, rng):
            uv_t = project_pixel(tgt, small_intrinsics, point)
            uv_s = project_pixel(src, small_intrinsics, point)
            pix = int(round(uv_t[1])) * 16 + int(round(uv_t[0]))
            pts = g.points[pix][g.valid[pix]]
            if pts.size == 0:
                continue
            dist = np.min(np.linalg.norm(pts - uv_s[None, :], axis=1))
            # nearest sample within half the sample spacing plus the
            # rounding of the query pixel to its grid cell
            assert dist < 1.5

    def test_pure_rotation_fallback(self, small_intrinsics):
        rel = Pose(axis_rotation(1, 0.1), np.zeros(3))
        g = build_epipolar_geometry(self._trajectory(rel, small_intrinsics),
                                    2, 16, 16)
        assert g.degenerate
        k = small_intrinsics.matrix
        hom = k @ rel.R @ np.linalg.inv(k)
        for pix in (0, 60, 200):
            x, y = pix % 16, pix // 16
            warped = hom @ np.array([x, y, 1.0])
            xy = warped[:2] / warped[2]
            inside = (0 <= xy[0] <= 15) and (0 <= xy[1] <= 15)
            if not inside:
                assert not g.valid[pix].any()
                continue
            assert g.valid[pix].all()
            # one warped point replicated across all samples
            np.testing.assert_allclose(g.points[pix],
                                       np.tile(xy, (g.l, 1)), atol=1e-9)

    def test_frame_index_validation(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        traj = self._trajectory(rel, small_intrinsics)
        with pytest.raises(ValueError):
            build_epipolar_geometry(traj, 1, 16, 16)
        with pytest.raises(ValueError):
            build_epipolar_geometry(traj, 3, 16, 16)

    def test_line_accessor_round_trip(self, rng, small_intrinsics):
        rel = nearby_pose(rng)
        g = build_epipolar_geometry(self._trajectory(rel, small_intrinsics),
                                    2, 16, 16)
        one = g.line(40)
        np.testing.assert_allclose(one.points, g.points[40], atol=0)
        assert np.array_equal(one.valid, g.valid[40])
