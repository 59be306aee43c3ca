#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "evfuse/pipeline.hpp"

namespace evfuse {

/// Bad configuration or command-line usage.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OutputKind { stacks, histories };

/// Everything a command can be configured with. Populated from `key = value`
/// lines; the key names double as long command-line flags.
struct RunConfig {
  StereoRig rig;
  Representation representation = Representation::histogram;
  StackConfig stack;
  SamplingConfig sampling;
  std::optional<Timestamp> t_d;  // default: last event of the inputs

  FusionMode fusion = FusionMode::none;
  OcclusionPolicy occlusion = OcclusionPolicy::keep_nearest;  // vsh and guided
  VshConfig vsh;
  BthConfig bth;
  double guided_lambda = 0.8;
  double guided_width = 1.0;

  int window = 9;
  CostMetric metric = CostMetric::sad;
  int disparities = 0;  // 0: rig.d_max

  std::uint64_t seed = 0;
  std::string mask;  // tensor path; empty: every valid gt pixel
  OutputKind output = OutputKind::stacks;

  SceneSpec scene = suite_scene(1);
  LidarSpec lidar = LidarSpec::m3ed_like();
  double lidar_offset_ms = 0.0;

  int suite_scenes = 4;
  std::vector<Representation> suite_representations = all_representations();
  std::vector<FusionMode> suite_fusions = all_fusion_modes();
  std::vector<double> suite_offsets_ms{0.0};

  /// Throws UsageError for an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);

  /// Seeds the randomised stages from `seed`.
  HarnessConfig harness() const;
  BenchSuite suite() const;

  static const std::vector<std::string>& keys();
  static std::string help(const std::string& key);
};

/// `key = value` lines; '#' starts a comment. Later lines win.
void apply_config(RunConfig& cfg, std::istream& is);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace evfuse
