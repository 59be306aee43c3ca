#include "evfuse/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace evfuse {

namespace {

constexpr std::array<std::pair<FusionMode, std::string_view>, 5> kFusionNames{{
    {FusionMode::none, "none"},
    {FusionMode::guided, "guided"},
    {FusionMode::vsh, "vsh"},
    {FusionMode::bth_single, "bth-single"},
    {FusionMode::bth_repeated, "bth-repeated"},
}};

Timestamp offset_us(double ms) { return static_cast<Timestamp>(std::llround(ms * 1000.0)); }

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string_view to_string(FusionMode m) {
  for (const auto& [mode, name] : kFusionNames) {
    if (mode == m) return name;
  }
  return "unknown";
}

FusionMode parse_fusion_mode(std::string_view name) {
  for (const auto& [mode, n] : kFusionNames) {
    if (n == name) return mode;
  }
  throw std::invalid_argument("unknown fusion mode '" + std::string(name) + "'");
}

const std::vector<FusionMode>& all_fusion_modes() {
  static const std::vector<FusionMode> modes = [] {
    std::vector<FusionMode> v;
    for (const auto& entry : kFusionNames) v.push_back(entry.first);
    return v;
  }();
  return modes;
}

EventHistory sample(const EventHistory& stream, Timestamp t_d, const SamplingConfig& cfg) {
  switch (cfg.kind) {
    case SamplingConfig::Kind::sbn: return sample_sbn(stream, t_d, cfg.count);
    case SamplingConfig::Kind::sbt: return sample_sbt(stream, t_d, cfg.window_us);
    case SamplingConfig::Kind::all: break;
  }
  return sample_sbn(stream, t_d, stream.size());
}

TimeRange stacking_interval(const EventHistory& left, const EventHistory& right, Timestamp t_d,
                            const SamplingConfig& cfg) {
  if (cfg.kind == SamplingConfig::Kind::sbt) {
    return {t_d >= cfg.window_us ? t_d - cfg.window_us : 0, t_d};
  }
  if (left.empty() && right.empty()) return {t_d, t_d};
  return conservative_range(left, right);
}

PipelineResult run_pipeline(const SynthScene& scene, Representation rep, FusionMode fusion,
                            Timestamp offset, const HarnessConfig& cfg) {
  const StereoRig rig = scene.rig();
  const Timestamp t_d = scene.t_d;
  if (offset > t_d) throw std::invalid_argument("offset reaches before the stream origin");
  const Timestamp t_z = t_d - offset;

  const EventHistory left = sample(scene.left, t_d, cfg.sampling);
  const EventHistory right = sample(scene.right, t_d, cfg.sampling);
  const TimeRange interval = stacking_interval(left, right, t_d, cfg.sampling);

  PipelineResult result;
  std::vector<DepthMeasurement> points;
  SparseDisparityGrid hints(rig.width, rig.height);
  if (fusion != FusionMode::none) {
    points = lidar_sample(scene.field, cfg.lidar, t_z);
    hints = project_to_grid(rig, points, OcclusionPolicy::keep_nearest);
    result.hints = hints.valid_count();
  }

  Stack stack_l;
  Stack stack_r;
  if (fusion == FusionMode::bth_single || fusion == FusionMode::bth_repeated) {
    BthConfig bth = cfg.bth;
    bth.mode = fusion == FusionMode::bth_single ? InjectionMode::single : InjectionMode::repeated;
    const BthResult injected = bth_with_offset(left, right, points, t_z, t_d, rig, bth, interval);
    result.injected = injected.injected.size();
    stack_l = make_stack(rep, injected.left, rig, interval, cfg.stack);
    stack_r = make_stack(rep, injected.right, rig, interval, cfg.stack);
  } else {
    stack_l = make_stack(rep, left, rig, interval, cfg.stack);
    stack_r = make_stack(rep, right, rig, interval, cfg.stack);
    if (fusion == FusionMode::vsh) {
      VshResult injected = vsh_inject(stack_l, stack_r, hints, cfg.vsh);
      result.injected = injected.cells_written;
      stack_l = std::move(injected.left);
      stack_r = std::move(injected.right);
    }
  }

  CostVolume volume = build_cost_volume(stack_l, stack_r, cfg.window, rig.d_max, cfg.metric);
  if (fusion == FusionMode::guided) {
    volume = guided_modulate(volume, hints, cfg.guided_lambda, cfg.guided_width);
  }
  result.disparity = wta(volume);

  const PixelMask all = gt_mask(scene.gt);
  PixelMask hinted(rig.width, rig.height);
  PixelMask flat(rig.width, rig.height);
  for (int y = 0; y < rig.height; ++y) {
    for (int x = 0; x < rig.width; ++x) {
      if (!all.at(x, y)) continue;
      hinted.set(x, y, hints.valid(x, y));
      flat.set(x, y, scene.textureless.at(x, y));
    }
  }
  result.all = accumulate(result.disparity, scene.gt, all);
  result.hinted = accumulate(result.disparity, scene.gt, hinted);
  result.textureless = accumulate(result.disparity, scene.gt, flat);
  return result;
}

SceneSpec suite_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.disparity_rate_px_s = 10.0;
  spec.seed = seed;
  return spec;
}

BenchSuite default_suite(int scenes) {
  BenchSuite suite;
  for (int i = 1; i <= scenes; ++i) suite.scenes.push_back(suite_scene(static_cast<std::uint64_t>(i)));
  return suite;
}

std::vector<double> offset_preset() { return {0.0, 3.0, 13.0, 32.0, 61.0, 100.0}; }

std::vector<BenchRow> run_bench(const BenchSuite& suite) {
  struct Pooled {
    MetricsAccumulator all;
    MetricsAccumulator hinted;
    MetricsAccumulator textureless;
  };
  std::vector<Pooled> pooled(suite.representations.size() * suite.fusions.size() * suite.offsets_ms.size());
  auto slot = [&](std::size_t r, std::size_t f, std::size_t o) -> Pooled& {
    return pooled[(r * suite.fusions.size() + f) * suite.offsets_ms.size() + o];
  };

  for (const SceneSpec& spec : suite.scenes) {
    const SynthScene scene = synth_scene(spec);
    for (std::size_t r = 0; r < suite.representations.size(); ++r) {
      for (std::size_t f = 0; f < suite.fusions.size(); ++f) {
        for (std::size_t o = 0; o < suite.offsets_ms.size(); ++o) {
          const PipelineResult res = run_pipeline(scene, suite.representations[r], suite.fusions[f],
                                                  offset_us(suite.offsets_ms[o]), suite.harness);
          Pooled& p = slot(r, f, o);
          p.all.merge(res.all);
          p.hinted.merge(res.hinted);
          p.textureless.merge(res.textureless);
        }
      }
    }
  }

  std::vector<BenchRow> rows;
  for (std::size_t r = 0; r < suite.representations.size(); ++r) {
    for (std::size_t f = 0; f < suite.fusions.size(); ++f) {
      for (std::size_t o = 0; o < suite.offsets_ms.size(); ++o) {
        const Pooled& p = slot(r, f, o);
        rows.push_back({suite.representations[r], suite.fusions[f], suite.offsets_ms[o], p.all.report("all"),
                        p.hinted.report("hinted"), p.textureless.report("textureless")});
      }
    }
  }
  return rows;
}

void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows) {
  std::vector<double> offsets;
  for (const auto& row : rows) {
    if (std::find(offsets.begin(), offsets.end(), row.offset_ms) == offsets.end()) offsets.push_back(row.offset_ms);
  }
  std::vector<std::string> header{"representation", "fusion"};
  if (offsets.size() <= 1) {
    header.insert(header.end(), {"1PE", "2PE", "MAE", "1PE(hinted)", "1PE(textureless)"});
  } else {
    for (double o : offsets) header.push_back("1PE@" + fixed(o, 0) + "ms");
  }

  std::vector<std::vector<std::string>> table{header};
  std::map<std::pair<Representation, FusionMode>, std::size_t> index;
  for (const auto& row : rows) {
    const auto key = std::make_pair(row.representation, row.fusion);
    auto [it, inserted] = index.try_emplace(key, table.size());
    if (inserted) {
      table.push_back({std::string(to_string(row.representation)), std::string(to_string(row.fusion))});
      table.back().resize(header.size(), "-");
    }
    auto& cells = table[it->second];
    if (offsets.size() <= 1) {
      cells[2] = fixed(row.all.one_pe);
      cells[3] = fixed(row.all.two_pe);
      cells[4] = fixed(row.all.mae, 3);
      cells[5] = row.hinted.pixels ? fixed(row.hinted.one_pe) : "-";
      cells[6] = row.textureless.pixels ? fixed(row.textureless.one_pe) : "-";
    } else {
      const auto col = static_cast<std::size_t>(std::find(offsets.begin(), offsets.end(), row.offset_ms) - offsets.begin());
      cells[2 + col] = fixed(row.all.one_pe);
    }
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      if (c > 0) os << "  ";
      if (c < 2) {
        os << std::left << std::setw(static_cast<int>(widths[c])) << table[r][c];
      } else {
        os << std::right << std::setw(static_cast<int>(widths[c])) << table[r][c];
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto wdt : widths) total += wdt;
      os << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  os << std::right;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "representation,fusion,offset_ms,pixels,one_pe,two_pe,mae,hinted_pixels,hinted_one_pe,"
        "textureless_pixels,textureless_one_pe\n";
  for (const auto& row : rows) {
    os << to_string(row.representation) << ',' << to_string(row.fusion) << ',' << fixed(row.offset_ms, 3) << ','
       << row.all.pixels << ',' << fixed(row.all.one_pe, 4) << ',' << fixed(row.all.two_pe, 4) << ','
       << fixed(row.all.mae, 4) << ',' << row.hinted.pixels << ',' << fixed(row.hinted.one_pe, 4) << ','
       << row.textureless.pixels << ',' << fixed(row.textureless.one_pe, 4) << '\n';
  }
}

}  // namespace evfuse
