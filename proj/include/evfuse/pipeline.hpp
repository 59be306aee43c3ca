#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "evfuse/bth.hpp"
#include "evfuse/stacking.hpp"
#include "evfuse/stereo.hpp"
#include "evfuse/synth.hpp"
#include "evfuse/vsh.hpp"

namespace evfuse {

enum class FusionMode { none, guided, vsh, bth_single, bth_repeated };

std::string_view to_string(FusionMode m);
FusionMode parse_fusion_mode(std::string_view name);
const std::vector<FusionMode>& all_fusion_modes();

struct SamplingConfig {
  enum class Kind { sbn, sbt, all };  // all: every event up to t_d
  Kind kind = Kind::sbn;
  std::size_t count = 20'000;   // SBN
  Timestamp window_us = 30'000;  // SBT
};

/// Sample a history ending at t_d.
EventHistory sample(const EventHistory& stream, Timestamp t_d, const SamplingConfig& cfg);

/// Stacking interval for a sampled pair: the SBT window, or the conservative
/// range otherwise ([t_d, t_d] when both histories are empty).
TimeRange stacking_interval(const EventHistory& left, const EventHistory& right, Timestamp t_d,
                            const SamplingConfig& cfg);

struct HarnessConfig {
  StackConfig stack;
  SamplingConfig sampling;
  int window = 9;
  CostMetric metric = CostMetric::sad;
  double guided_lambda = 0.8;
  double guided_width = 1.0;
  VshConfig vsh;
  BthConfig bth;
  LidarSpec lidar = LidarSpec::m3ed_like();
};

struct PipelineResult {
  DisparityMap disparity;
  MetricsAccumulator all;
  MetricsAccumulator hinted;
  MetricsAccumulator textureless;
  std::size_t hints = 0;
  std::size_t injected = 0;  // BTH pairs or VSH cells
};

/// synth scene -> sampling -> depth hints at t_d - offset -> fusion ->
/// stacking -> cost volume -> WTA -> metrics.
PipelineResult run_pipeline(const SynthScene& scene, Representation rep, FusionMode fusion,
                            Timestamp offset_us, const HarnessConfig& cfg);

struct BenchSuite {
  std::vector<SceneSpec> scenes;
  std::vector<Representation> representations = all_representations();
  std::vector<FusionMode> fusions = all_fusion_modes();
  std::vector<double> offsets_ms{0.0};
  HarnessConfig harness;
};

/// Scene of the default suite: the planes also approach at 10 px/s of
/// disparity, so stale depth is wrong both laterally and in value.
SceneSpec suite_scene(std::uint64_t seed);

/// `scenes` suite scenes seeded 1..n, every representation and fusion mode,
/// offset 0.
BenchSuite default_suite(int scenes = 4);

/// Offsets at which stale depth is evaluated, in milliseconds.
std::vector<double> offset_preset();

struct BenchRow {
  Representation representation = Representation::histogram;
  FusionMode fusion = FusionMode::none;
  double offset_ms = 0.0;
  MetricsReport all;
  MetricsReport hinted;
  MetricsReport textureless;
};

/// One row per (representation, fusion, offset), pooled over all scenes.
std::vector<BenchRow> run_bench(const BenchSuite& suite);

/// Aligned text table. With one offset the columns are 1PE / 2PE / MAE plus
/// masked 1PE; with several, one 1PE column per offset.
void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows);
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

}  // namespace evfuse
