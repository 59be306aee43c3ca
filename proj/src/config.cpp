#include "evfuse/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace evfuse {

namespace {

std::string trimmed(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trimmed(value);
  const char* begin = v.data();
  if (!v.empty() && v.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError("bad value '" + value + "' for " + key);
  }
  return out;
}

bool boolean(const std::string& key, const std::string& value) {
  const std::string v = trimmed(value);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw UsageError("bad boolean '" + value + "' for " + key);
}

std::vector<std::string> list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename Fn>
auto parsed(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " (" + key + ")");
  }
}

struct Key {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define EVF_NUM(field, T) [](RunConfig& c, const std::string& k, const std::string& v) { c.field = number<T>(k, v); }
#define EVF_BOOL(field) [](RunConfig& c, const std::string& k, const std::string& v) { c.field = boolean(k, v); }

const std::vector<Key>& table() {
  static const std::vector<Key> keys = {
      {"rig.baseline_m", "stereo baseline in meters", EVF_NUM(rig.baseline_m, double)},
      {"rig.focal_px", "focal length in pixels", EVF_NUM(rig.focal_px, double)},
      {"rig.width", "sensor width", EVF_NUM(rig.width, int)},
      {"rig.height", "sensor height", EVF_NUM(rig.height, int)},
      {"rig.d_max", "disparity hypotheses / hint bound", EVF_NUM(rig.d_max, int)},

      {"stack.representation", "histogram|voxel|mdes|tore|timesurface|tencode|ergo",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.representation = parsed(k, [&] { return parse_representation(trimmed(v)); });
       }},
      {"stack.bins", "voxel grid bins", EVF_NUM(stack.bins, int)},
      {"stack.levels", "MDES levels", EVF_NUM(stack.levels, int)},
      {"stack.queue", "TORE queue length", EVF_NUM(stack.queue, int)},
      {"stack.decay_us", "time surface decays, comma separated",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.stack.decay_us.clear();
         for (const auto& item : list(v)) c.stack.decay_us.push_back(number<double>(k, item));
       }},
      {"stack.tore_clamp_us", "TORE clamp", EVF_NUM(stack.tore_clamp_us, double)},
      {"stack.tore_empty_as_oldest", "unfilled TORE slots read as the clamp value", EVF_BOOL(stack.tore_empty_as_oldest)},

      {"sampling.mode", "sbn|sbt|all",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trimmed(v);
         if (m == "sbn") {
           c.sampling.kind = SamplingConfig::Kind::sbn;
         } else if (m == "sbt") {
           c.sampling.kind = SamplingConfig::Kind::sbt;
         } else if (m == "all") {
           c.sampling.kind = SamplingConfig::Kind::all;
         } else {
           throw UsageError("bad value '" + v + "' for " + k);
         }
       }},
      {"sampling.count", "SBN event count", EVF_NUM(sampling.count, std::size_t)},
      {"sampling.window_us", "SBT window", EVF_NUM(sampling.window_us, Timestamp)},
      {"sampling.t_d", "query timestamp (default: last input event)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.t_d = number<Timestamp>(k, v); }},

      {"fusion.mode", "none|guided|vsh|bth-single|bth-repeated",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fusion = parsed(k, [&] { return parse_fusion_mode(trimmed(v)); });
       }},
      {"occlusion.policy", "keep_nearest|keep_all|discard_occluded (vsh, guided)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trimmed(v);
         if (m == "keep_nearest") {
           c.occlusion = OcclusionPolicy::keep_nearest;
         } else if (m == "keep_all") {
           c.occlusion = OcclusionPolicy::keep_all;
         } else if (m == "discard_occluded") {
           c.occlusion = OcclusionPolicy::discard_occluded;
         } else {
           throw UsageError("bad value '" + v + "' for " + k);
         }
       }},

      {"vsh.patch", "patch size (1, 3, 5)", EVF_NUM(vsh.patch, int)},
      {"vsh.uniform_patch", "one value per patch", EVF_BOOL(vsh.uniform_patch)},
      {"vsh.alpha", "blend weight", EVF_NUM(vsh.alpha, double)},
      {"vsh.range", "auto|minmax|percentile",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trimmed(v);
         const double lo = c.vsh.range ? c.vsh.range->p_lo : 5.0;
         const double hi = c.vsh.range ? c.vsh.range->p_hi : 95.0;
         if (m == "auto") {
           c.vsh.range.reset();
         } else if (m == "minmax") {
           c.vsh.range = RangeMode::minmax();
         } else if (m == "percentile") {
           c.vsh.range = RangeMode::percentile(lo, hi);
         } else {
           throw UsageError("bad value '" + v + "' for " + k);
         }
       }},
      {"vsh.p_lo", "lower percentile (vsh.range = percentile)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (!c.vsh.range) c.vsh.range = RangeMode::percentile(5.0, 95.0);
         c.vsh.range->p_lo = number<double>(k, v);
       }},
      {"vsh.p_hi", "upper percentile (vsh.range = percentile)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (!c.vsh.range) c.vsh.range = RangeMode::percentile(5.0, 95.0);
         c.vsh.range->p_hi = number<double>(k, v);
       }},
      {"vsh.share_channels", "one draw for all channels", EVF_BOOL(vsh.share_channels)},

      {"bth.k", "event pairs per patch cell", EVF_NUM(bth.events_per_cell, int)},
      {"bth.patch", "patch size (1, 3, 5)", EVF_NUM(bth.patch, int)},
      {"bth.uniform_patch", "one polarity per patch", EVF_BOOL(bth.uniform_patch)},
      {"bth.uniform_polarity", "one polarity for the K events", EVF_BOOL(bth.uniform_polarity)},
      {"bth.bins", "repeated-mode bins B", EVF_NUM(bth.bins, int)},
      {"bth.uniform_slots", "slot drawn uniformly from 1..B", EVF_BOOL(bth.uniform_slots)},

      {"guided.lambda", "modulation strength in [0, 1)", EVF_NUM(guided_lambda, double)},
      {"guided.width", "modulation width in pixels", EVF_NUM(guided_width, double)},

      {"match.window", "odd aggregation window", EVF_NUM(window, int)},
      {"match.metric", "sad|census",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trimmed(v);
         if (m == "sad") {
           c.metric = CostMetric::sad;
         } else if (m == "census") {
           c.metric = CostMetric::census;
         } else {
           throw UsageError("bad value '" + v + "' for " + k);
         }
       }},
      {"match.disparities", "hypotheses (0: rig.d_max)", EVF_NUM(disparities, int)},

      {"seed", "seed of the vsh and bth draws", EVF_NUM(seed, std::uint64_t)},
      {"metrics.mask", "mask tensor for eval (empty: all gt pixels)",
       [](RunConfig& c, const std::string&, const std::string& v) { c.mask = trimmed(v); }},
      {"output.kind", "stacks|histories (fuse)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trimmed(v);
         if (m == "stacks") {
           c.output = OutputKind::stacks;
         } else if (m == "histories") {
           c.output = OutputKind::histories;
         } else {
           throw UsageError("bad value '" + v + "' for " + k);
         }
       }},

      {"scene.width", "synthetic sensor width", EVF_NUM(scene.width, int)},
      {"scene.height", "synthetic sensor height", EVF_NUM(scene.height, int)},
      {"scene.d_max", "synthetic disparity hypotheses", EVF_NUM(scene.d_max, int)},
      {"scene.plane_disparities", "background first, comma separated",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.scene.plane_disparities.clear();
         for (const auto& item : list(v)) c.scene.plane_disparities.push_back(number<double>(k, item));
       }},
      {"scene.textureless_fraction", "fraction of textureless blocks", EVF_NUM(scene.textureless_fraction, double)},
      {"scene.textureless_block", "textureless block size", EVF_NUM(scene.textureless_block, int)},
      {"scene.dot_density", "random dot density", EVF_NUM(scene.dot_density, double)},
      {"scene.velocity_px_s", "lateral velocity", EVF_NUM(scene.velocity_px_s, double)},
      {"scene.disparity_rate_px_s", "disparity drift", EVF_NUM(scene.disparity_rate_px_s, double)},
      {"scene.start_us", "recording start", EVF_NUM(scene.start_us, Timestamp)},
      {"scene.duration_us", "recording length", EVF_NUM(scene.duration_us, Timestamp)},
      {"scene.contrast_threshold", "log-intensity threshold", EVF_NUM(scene.contrast_threshold, double)},
      {"scene.seed", "scene seed (suite scenes use seed, seed + 1, ...)", EVF_NUM(scene.seed, std::uint64_t)},

      {"lidar.lines", "scan lines", EVF_NUM(lidar.lines, int)},
      {"lidar.density", "sampled fraction of each line", EVF_NUM(lidar.density, double)},
      {"lidar.seed", "column selection seed", EVF_NUM(lidar.seed, std::uint64_t)},
      {"lidar.offset_ms", "scan age relative to t_d (synth)", EVF_NUM(lidar_offset_ms, double)},

      {"suite.scenes", "number of scenes", EVF_NUM(suite_scenes, int)},
      {"suite.representations", "comma separated, or all",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trimmed(v) == "all") {
           c.suite_representations = all_representations();
           return;
         }
         c.suite_representations.clear();
         for (const auto& item : list(v)) {
           c.suite_representations.push_back(parsed(k, [&] { return parse_representation(item); }));
         }
       }},
      {"suite.fusions", "comma separated, or all",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trimmed(v) == "all") {
           c.suite_fusions = all_fusion_modes();
           return;
         }
         c.suite_fusions.clear();
         for (const auto& item : list(v)) c.suite_fusions.push_back(parsed(k, [&] { return parse_fusion_mode(item); }));
       }},
      {"suite.offsets_ms", "comma separated, or preset (0, 3, 13, 32, 61, 100)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trimmed(v) == "preset") {
           c.suite_offsets_ms = offset_preset();
           return;
         }
         c.suite_offsets_ms.clear();
         for (const auto& item : list(v)) c.suite_offsets_ms.push_back(number<double>(k, item));
       }},
  };
  return keys;
}

#undef EVF_NUM
#undef EVF_BOOL

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = table();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == key; });
  if (it == keys.end()) throw UsageError("unknown config key '" + key + "'");
  it->set(*this, key, value);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : table()) out.push_back(k.name);
    return out;
  }();
  return names;
}

std::string RunConfig::help(const std::string& key) {
  for (const auto& k : table()) {
    if (k.name == key) return k.help;
  }
  return {};
}

HarnessConfig RunConfig::harness() const {
  HarnessConfig h;
  h.stack = stack;
  h.sampling = sampling;
  h.window = window;
  h.metric = metric;
  h.guided_lambda = guided_lambda;
  h.guided_width = guided_width;
  h.vsh = vsh;
  h.vsh.seed = seed;
  h.bth = bth;
  h.bth.seed = seed;
  h.lidar = lidar;
  return h;
}

BenchSuite RunConfig::suite() const {
  if (suite_scenes < 1) throw UsageError("suite.scenes must be >= 1");
  BenchSuite s;
  for (int i = 0; i < suite_scenes; ++i) {
    SceneSpec spec = scene;
    spec.seed = scene.seed + static_cast<std::uint64_t>(i);
    s.scenes.push_back(spec);
  }
  s.representations = suite_representations;
  s.fusions = suite_fusions;
  s.offsets_ms = suite_offsets_ms;
  s.harness = harness();
  return s;
}

void apply_config(RunConfig& cfg, std::istream& is) {
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(number) + ": expected key = value");
    try {
      cfg.set(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config '" + path.string() + "'");
  apply_config(cfg, f);
}

}  // namespace evfuse
