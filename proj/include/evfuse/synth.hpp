#pragma once

#include <cstdint>
#include <vector>

#include "evfuse/event.hpp"
#include "evfuse/stereo.hpp"

namespace evfuse {

/// Random-dot fronto-parallel planes seen by a moving stereo event camera.
///
/// Plane 0 is a background covering the whole view; every further plane is a
/// rectangle placed by the seed. Planes translate horizontally at
/// `velocity_px_s` and their disparity drifts at `disparity_rate_px_s`
/// (positive: approaching). Disparities are the values at the end of the
/// recording, which is also the query time t_d.
struct SceneSpec {
  int width = 160;
  int height = 128;
  int d_max = 48;
  double baseline_m = 0.5;
  double focal_px = 600.0;
  std::vector<double> plane_disparities{8.0, 20.0, 32.0};
  double textureless_fraction = 0.4;
  int textureless_block = 16;  // texels per side of a textureless block
  double dot_density = 0.3;
  double velocity_px_s = 200.0;
  double disparity_rate_px_s = 0.0;
  Timestamp start_us = 200'000;
  Timestamp duration_us = 50'000;
  double contrast_threshold = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
  StereoRig rig() const;
};

struct ScenePlane {
  double disparity = 0.0;  // at t_d
  // Rectangle in plane coordinates (left-image pixels at t_d), half-open.
  double x0 = 0.0;
  double x1 = 0.0;
  int y0 = 0;
  int y1 = 0;
};

/// Analytic scene geometry that can be evaluated at any time, including
/// before the recording started (needed to emulate stale depth scans).
class DepthField {
 public:
  DepthField() = default;
  DepthField(const SceneSpec& spec, std::vector<ScenePlane> planes);

  const StereoRig& rig() const { return rig_; }
  Timestamp t_d() const { return t_d_; }
  const std::vector<ScenePlane>& planes() const { return planes_; }

  /// Index of the plane visible at left pixel (x, y) at time t.
  int visible_plane(int x, int y, Timestamp t) const;
  /// Index of the plane visible at right pixel (x, y) at time t.
  int visible_plane_right(int x, int y, Timestamp t) const;
  double plane_disparity(int plane, Timestamp t) const;
  double disparity_at(int x, int y, Timestamp t) const;
  double depth_at(int x, int y, Timestamp t) const;
  /// Texture coordinate of left pixel column x on `plane` at time t.
  double texture_u(int plane, double x, Timestamp t) const;
  double velocity_px_s() const { return velocity_; }
  double disparity_rate_px_s() const { return rate_; }

 private:
  bool covers(int plane, double u, int y) const;

  StereoRig rig_;
  Timestamp t_d_ = 0;
  double velocity_ = 0.0;
  double rate_ = 0.0;
  std::vector<ScenePlane> planes_;
};

struct SynthScene {
  EventHistory left;
  EventHistory right;
  DisparityMap gt;           // at t_d; invalid where x - d < 0
  PixelMask textureless;     // gt pixels lying in a textureless block
  DepthField field;
  Timestamp t_d = 0;
  StereoRig rig() const { return field.rig(); }
};

/// Render both views over the recording and emit an event whenever a pixel's
/// log intensity moves a full contrast threshold away from its reference.
SynthScene synth_scene(const SceneSpec& spec);

struct LidarSpec {
  int lines = 64;
  double density = 0.10;  // fraction of columns sampled per line
  std::uint64_t seed = 7;

  static LidarSpec dsec_like() { return {16, 0.10, 7}; }
  static LidarSpec m3ed_like() { return {64, 0.10, 7}; }
};

/// Sample `lines` equally spaced rows, round(density * W) seeded columns per
/// row, reading depth from the scene as it was at t_z. The sampled pixel
/// positions do not depend on t_z.
std::vector<DepthMeasurement> lidar_sample(const DepthField& field, const LidarSpec& spec,
                                           Timestamp t_z);

}  // namespace evfuse
