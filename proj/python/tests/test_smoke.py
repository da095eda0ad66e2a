# Copyright 2026 The fewbeam Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import numpy as np
import pytest

import fewbeam


def test_project_point_identity():
    K = fewbeam.CameraIntrinsics.kitti_like(320, 96)
    u, v, d, valid = fewbeam.project_point(K, fewbeam.PoseSE3(), 7.0, 10.0, 20.0)
    assert valid
    assert (u, v) == pytest.approx((10.0, 20.0))
    assert d == pytest.approx(7.0)


def test_pose_roundtrip():
    p = fewbeam.PoseSE3.from_axis_angle([0.1, 0.0, -0.2], [1.0, 2.0, 3.0])
    q = p * p.inverse()
    assert np.allclose(q.matrix(), np.eye(4))
    assert fewbeam.rotation_angle(p.R, p.R) == 0.0


def test_metrics_against_numpy():
    rng = np.random.default_rng(0)
    gt = rng.uniform(1, 70, (12, 20))
    pred = gt * rng.uniform(0.8, 1.2, gt.shape)
    m = fewbeam.eigen_metrics(pred, gt)
    assert m["count"] == gt.size
    assert m["abs_rel"] == pytest.approx(np.mean(np.abs(pred - gt) / gt), rel=1e-12)
    assert m["rmse"] == pytest.approx(np.sqrt(np.mean((pred - gt) ** 2)), rel=1e-12)
    scaled, ratio = fewbeam.rescale_to_gt(0.5 * gt, gt, "median")
    assert ratio == pytest.approx(2.0)
    assert np.allclose(scaled, gt)


def test_cdr_and_signed_error():
    assert fewbeam.cdr([0.6, 0.2, 0.7], 0.5) == pytest.approx(2 / 3)
    gt = np.full((4, 4), 10.0)
    mask = np.zeros((4, 4), dtype=bool)
    mask[1:3, 1:3] = True
    assert fewbeam.instance_signed_error(gt * 1.5, gt, mask) == pytest.approx(0.5)
    assert fewbeam.instance_signed_error(gt, gt, np.zeros((4, 4), bool)) is None
    with pytest.raises(fewbeam.InvalidArgument):
        fewbeam.cdr([], 0.5)


def test_beams():
    rings, per_ring = 64, 50
    az = 2 * np.pi * np.arange(per_ring) / per_ring
    pts = []
    for r in range(rings):
        el = -0.005 * r
        pts.append(np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az),
                             np.full(per_ring, np.sin(el)), np.zeros(per_ring)], axis=1) * 10)
    cloud = np.concatenate(pts)
    assert len(set(fewbeam.segment_beams(cloud))) == 64
    kept, kept_rings = fewbeam.subsample_beams(cloud, 16)
    assert sorted(set(kept_rings)) == [0, 16, 32, 48]
    assert kept.shape == (4 * per_ring, 4)


def test_synthesize_and_optimize():
    t = fewbeam.synthesize("width 64\nheight 32\n", seed=2)
    assert t["target"].shape == (32, 64, 3)
    assert t["gt_depth"].shape == (32, 64)
    out = fewbeam.optimize_depth(t["target"], t["sources"], t["lidar"], t["K"], t["poses"],
                                 supervision="masked", learning_rate=0.05, steps=20, multiscale_levels=2)
    assert out["depth"].shape == (32, 64)
    assert out["trace"].shape == (21, 5)
    assert np.all(out["depth"] >= 0.1) and np.all(out["depth"] <= 100)


def test_pnp_on_exact_data():
    K = fewbeam.CameraIntrinsics(721.5, 721.5, 609.6, 172.9, 1242, 375)
    pose = fewbeam.PoseSE3.from_axis_angle([0.01, -0.02, 0.005], [0.1, 0.0, 1.0])
    rng = np.random.default_rng(3)
    rows = []
    for _ in range(40):
        u, v, d = rng.uniform(0, 1241), rng.uniform(0, 374), rng.uniform(5, 40)
        x = d * np.array([(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0])
        y = pose.apply(x)
        rows.append([u, v, d, K.fx * y[0] / y[2] + K.cx, K.fy * y[1] / y[2] + K.cy])
    r = fewbeam.pnp_ransac(np.array(rows), K, seed=1)
    assert r["num_inliers"] == 40
    assert np.allclose(r["pose"].t, pose.t, atol=1e-6)


def test_io_and_cli(tmp_path):
    depth = np.zeros((3, 4))
    depth[0, 0] = 1.0
    path = str(tmp_path / "d.png")
    fewbeam.write_depth_png(path, depth)
    assert np.array_equal(fewbeam.read_depth_png(path), depth)
    with pytest.raises(fewbeam.InvalidArgument):
        fewbeam.write_depth_png(path, depth + 300)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"\0" * 17)
    with pytest.raises(fewbeam.FormatError):
        fewbeam.read_velodyne_bin(str(bad))
    code, out, _ = fewbeam.run_cli(["eval", "--pred", path, "--gt", path])
    assert code == 0
    assert '"a1": 1' in out
    assert fewbeam.run_cli(["nope"])[0] == 2
