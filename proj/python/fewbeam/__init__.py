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
"""Depth estimation from monocular video with few-beam LiDAR supervision."""

from ._fewbeam import (
    CameraIntrinsics,
    Error,
    FormatError,
    InvalidArgument,
    NonConvergence,
    PoseSE3,
    cdr,
    dilate_sparse_depth,
    eigen_metrics,
    instance_signed_error,
    lidar_to_camera_extrinsics,
    optimize_depth,
    pnp_ransac,
    project_point,
    project_point_cloud,
    read_depth_png,
    read_velodyne_bin,
    rescale_to_gt,
    rotation_angle,
    run_cli,
    segment_beams,
    subsample_beams,
    synthesize,
    warp_image,
    write_depth_png,
    write_velodyne_bin,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
