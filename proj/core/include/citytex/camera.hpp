/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include "citytex/common.hpp"

namespace citytex {

struct CameraPose {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::UnitZ();
  Vec3 up = Vec3::UnitY();
  real fov_deg = 60.0;  // vertical field of view
  int width = 512;
  int height = 512;

  void validate() const;
};

// Orthonormal camera basis; the camera looks along `forward`.
struct CameraFrame {
  Vec3 right;
  Vec3 up;
  Vec3 forward;
};

CameraFrame camera_frame(const CameraPose& pose);

// World point -> continuous screen coordinates (sx in [0,W], sy in [0,H],
// y down) plus view-space depth (positive in front of the camera).
// Returns false when the point is behind the near plane.
bool project_point(const CameraPose& pose, const Vec3& p, real* sx, real* sy, real* depth);

// Direction of the ray through continuous screen coordinates (sx, sy).
Vec3 ray_direction(const CameraPose& pose, real sx, real sy);

}  // namespace citytex
