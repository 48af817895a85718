/* SPDX-FileCopyrightText: 2026 citytex Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include "citytex/camera.hpp"

#include <cmath>

namespace citytex {

namespace {
constexpr real kNearPlane = 1e-4;
}

void CameraPose::validate() const {
  if ((position - look_at).squaredNorm() <= 0.0)
    throw Error::validation("camera position equals look_at");
  if (!(fov_deg > 0.0 && fov_deg < 180.0))
    throw Error::validation("camera fov must be in (0, 180) degrees");
  if (width < 1 || height < 1) throw Error::validation("camera resolution must be positive");
  const Vec3 fwd = (look_at - position).normalized();
  if (std::abs(fwd.dot(up.normalized())) > 1.0 - 1e-9)
    throw Error::validation("camera up vector is parallel to the view direction");
}

CameraFrame camera_frame(const CameraPose& pose) {
  CameraFrame f;
  f.forward = (pose.look_at - pose.position).normalized();
  f.right = f.forward.cross(pose.up).normalized();
  f.up = f.right.cross(f.forward);
  return f;
}

bool project_point(const CameraPose& pose, const Vec3& p, real* sx, real* sy, real* depth) {
  const CameraFrame f = camera_frame(pose);
  const Vec3 d = p - pose.position;
  const real z = d.dot(f.forward);
  *depth = z;
  if (z < kNearPlane) return false;
  const real x = d.dot(f.right);
  const real y = d.dot(f.up);
  const real tan_half = std::tan(deg_to_rad(pose.fov_deg) * 0.5);
  const real aspect = static_cast<real>(pose.width) / pose.height;
  const real ndc_x = x / (z * tan_half * aspect);
  const real ndc_y = y / (z * tan_half);
  *sx = (ndc_x + 1.0) * 0.5 * pose.width;
  // Screen y grows downward while the camera up axis grows upward.
  *sy = (1.0 - ndc_y) * 0.5 * pose.height;
  return true;
}

Vec3 ray_direction(const CameraPose& pose, real sx, real sy) {
  const CameraFrame f = camera_frame(pose);
  const real tan_half = std::tan(deg_to_rad(pose.fov_deg) * 0.5);
  const real aspect = static_cast<real>(pose.width) / pose.height;
  const real ndc_x = sx / pose.width * 2.0 - 1.0;
  const real ndc_y = 1.0 - sy / pose.height * 2.0;
  const Vec3 dir =
      f.forward + f.right * (ndc_x * tan_half * aspect) + f.up * (ndc_y * tan_half);
  return dir.normalized();
}

}  // namespace citytex
