#include "evfuse/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

#include "evfuse/io.hpp"

namespace evfuse {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

StereoRig rig_for(const RunConfig& cfg, int width, int height) {
  StereoRig rig = cfg.rig;
  rig.width = width;
  rig.height = height;
  rig.validate();
  return rig;
}

Timestamp last_timestamp(const std::vector<Event>& a, const std::vector<Event>& b = {}) {
  Timestamp t = 0;
  if (!a.empty()) t = std::max(t, a.back().t);
  if (!b.empty()) t = std::max(t, b.back().t);
  return t;
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
  return fs::path(prefix.string() + suffix);
}

}  // namespace

void cmd_stack(const fs::path& events, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  cfg.stack.validate();
  const auto start = Clock::now();
  EventFile file = load_events(events);
  const StereoRig rig = rig_for(cfg, file.width, file.height);
  const Timestamp t_d = cfg.t_d.value_or(last_timestamp(file.events));
  const std::size_t total = file.events.size();
  const EventHistory stream(std::move(file.events));
  const EventHistory h = sample(stream, t_d, cfg.sampling);
  const TimeRange interval = stacking_interval(h, h, t_d, cfg.sampling);
  const Stack s = make_stack(cfg.representation, h, rig, interval, cfg.stack);
  save_tensor(out, to_tensor(s));
  const double ms = elapsed_ms(start);
  log << "events " << total << "\n"
      << "stacked " << h.size() << "\n"
      << "interval " << interval.begin << " " << interval.end << "\n"
      << "wall_ms " << std::fixed << std::setprecision(3) << ms << "\n"
      << "throughput_events_per_s " << std::setprecision(0) << (ms > 0.0 ? static_cast<double>(total) / (ms * 1e-3) : 0.0)
      << "\n";
  log.unsetf(std::ios::floatfield);
}

void cmd_fuse(const fs::path& left, const fs::path& right, const fs::path& depth, const RunConfig& cfg,
              const fs::path& out, std::ostream& log) {
  if (cfg.fusion == FusionMode::vsh && cfg.output == OutputKind::histories) {
    throw UsageError("vsh acts on stacks; output.kind = histories is not available");
  }
  cfg.stack.validate();
  EventFile fl = load_events(left);
  EventFile fr = load_events(right);
  if (fl.width != fr.width || fl.height != fr.height) {
    throw std::runtime_error("left and right event files differ in sensor size");
  }
  const StereoRig rig = rig_for(cfg, fl.width, fl.height);
  const Timestamp t_d = cfg.t_d.value_or(last_timestamp(fl.events, fr.events));
  const std::vector<DepthMeasurement> points = load_depth_csv(depth);
  Timestamp t_z = t_d;
  if (!points.empty()) {
    t_z = std::max_element(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.t_z < b.t_z; })->t_z;
  }
  if (t_z > t_d) throw std::runtime_error("depth timestamp lies after the query timestamp");

  const EventHistory hl = sample(EventHistory(std::move(fl.events), Side::left), t_d, cfg.sampling);
  const EventHistory hr = sample(EventHistory(std::move(fr.events), Side::right), t_d, cfg.sampling);
  const TimeRange interval = stacking_interval(hl, hr, t_d, cfg.sampling);

  const bool bth = cfg.fusion == FusionMode::bth_single || cfg.fusion == FusionMode::bth_repeated;
  SparseDisparityGrid grid =
      project_to_grid(rig, points, bth ? OcclusionPolicy::discard_occluded : cfg.occlusion);

  std::size_t used = 0;
  std::size_t injected = 0;
  EventHistory out_l = hl;
  EventHistory out_r = hr;
  std::optional<Stack> stack_l;
  std::optional<Stack> stack_r;
  if (bth) {
    BthConfig b = cfg.bth;
    b.seed = cfg.seed;
    b.mode = cfg.fusion == FusionMode::bth_single ? InjectionMode::single : InjectionMode::repeated;
    BthResult r = bth_with_offset(hl, hr, points, t_z, t_d, rig, b, interval);
    used = r.hints_used;
    injected = r.injected.size();
    out_l = std::move(r.left);
    out_r = std::move(r.right);
  }
  if (cfg.output == OutputKind::stacks) {
    stack_l = make_stack(cfg.representation, out_l, rig, interval, cfg.stack);
    stack_r = make_stack(cfg.representation, out_r, rig, interval, cfg.stack);
    if (cfg.fusion == FusionMode::vsh) {
      VshConfig v = cfg.vsh;
      v.seed = cfg.seed;
      VshResult r = vsh_inject(*stack_l, *stack_r, grid, v);
      used = r.hints_used;
      injected = r.cells_written;
      stack_l = std::move(r.left);
      stack_r = std::move(r.right);
    }
  }
  if (cfg.fusion == FusionMode::guided) used = grid.valid_count();

  if (cfg.output == OutputKind::stacks) {
    save_tensor(with_suffix(out, ".left.tensor"), to_tensor(*stack_l));
    save_tensor(with_suffix(out, ".right.tensor"), to_tensor(*stack_r));
  } else {
    save_events(with_suffix(out, ".left.evt"), {rig.width, rig.height, {out_l.events().begin(), out_l.events().end()}});
    save_events(with_suffix(out, ".right.evt"), {rig.width, rig.height, {out_r.events().begin(), out_r.events().end()}});
  }
  save_tensor(with_suffix(out, ".hints.tensor"), to_tensor(grid));

  log << "fusion " << to_string(cfg.fusion) << "\n"
      << "measurements " << points.size() << "\n"
      << "used " << used << "\n"
      << "dropped " << grid.dropped_out_of_range << "\n"
      << "occluded " << grid.occluded << "\n"
      << "injected " << injected << "\n";
}

void cmd_match(const fs::path& left, const fs::path& right, const std::optional<fs::path>& hints,
               const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const Stack l = to_stack(load_tensor(left));
  const Stack r = to_stack(load_tensor(right));
  const int disparities = cfg.disparities > 0 ? cfg.disparities : cfg.rig.d_max;
  CostVolume volume = build_cost_volume(l, r, cfg.window, disparities, cfg.metric);
  if (cfg.fusion == FusionMode::guided) {
    if (!hints) throw UsageError("guided matching needs --hints");
    volume = guided_modulate(volume, to_grid(load_tensor(*hints)), cfg.guided_lambda, cfg.guided_width);
  }
  const DisparityMap d = wta(volume);
  save_tensor(out, to_tensor(d));
  log << "pixels " << d.valid_count() << "\n"
      << "disparities " << disparities << "\n";
}

void cmd_eval(const fs::path& pred, const fs::path& gt, const RunConfig& cfg, const std::optional<fs::path>& out,
              std::ostream& log) {
  const DisparityMap p = to_disparity(load_tensor(pred));
  const DisparityMap g = to_disparity(load_tensor(gt));
  if (p.width() != g.width() || p.height() != g.height()) {
    throw std::runtime_error("prediction and ground truth differ in size");
  }
  const PixelMask mask = cfg.mask.empty() ? gt_mask(g) : to_mask(load_tensor(cfg.mask));
  const MetricsReport m = evaluate(p, g, mask, cfg.mask.empty() ? "all" : "mask");
  log << std::fixed << std::setprecision(4) << "pixels " << m.pixels << "\n"
      << "1PE " << m.one_pe << "\n"
      << "2PE " << m.two_pe << "\n"
      << "MAE " << m.mae << "\n";
  log.unsetf(std::ios::floatfield);
  if (out) {
    Tensor err{"error", 1, g.height(), g.width(), {}, {}};
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        const bool ok = mask.at(x, y) && p.valid(x, y);
        err.data.push_back(ok ? static_cast<float>(std::abs(p.at(x, y) - g.at(x, y)))
                              : std::numeric_limits<float>::quiet_NaN());
      }
    }
    save_tensor(*out, err);
  }
}

void cmd_synth(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const SynthScene scene = synth_scene(cfg.scene);
  fs::create_directories(dir);
  const StereoRig rig = scene.rig();
  save_events(dir / "left.evt", {rig.width, rig.height, {scene.left.events().begin(), scene.left.events().end()}});
  save_events(dir / "right.evt", {rig.width, rig.height, {scene.right.events().begin(), scene.right.events().end()}});
  save_tensor(dir / "gt.tensor", to_tensor(scene.gt));
  save_tensor(dir / "textureless.tensor", to_tensor(scene.textureless));
  const auto offset = static_cast<Timestamp>(std::llround(cfg.lidar_offset_ms * 1000.0));
  if (offset > scene.t_d) throw UsageError("lidar.offset_ms reaches before the stream origin");
  const auto points = lidar_sample(scene.field, cfg.lidar, scene.t_d - offset);
  save_depth_csv(dir / "depth.csv", points);
  log << "left_events " << scene.left.size() << "\n"
      << "right_events " << scene.right.size() << "\n"
      << "t_d " << scene.t_d << "\n"
      << "measurements " << points.size() << "\n"
      << "rig " << rig.width << "x" << rig.height << " d_max " << rig.d_max << " baseline_m " << rig.baseline_m
      << " focal_px " << rig.focal_px << "\n";
}

void cmd_bench(const RunConfig& cfg, const std::optional<fs::path>& csv, std::ostream& log) {
  const auto rows = run_bench(cfg.suite());
  write_bench_table(log, rows);
  if (csv) {
    std::ofstream f(*csv, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + csv->string() + "'");
    write_bench_csv(f, rows);
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event stereo with virtual stack and back-in-time hallucination", "evfuse"};
  app.require_subcommand(1);

  std::string config;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> overrides;

  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "seed of the randomised stages");
    auto* o = sub->add_option("--out", out_path, "output path");
    if (out_required) o->required();
    for (const auto& key : RunConfig::keys()) {
      if (key == "seed") continue;
      sub->add_option_function<std::string>(
          "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, RunConfig::help(key));
    }
  };

  std::string in_a;
  std::string in_b;
  std::string in_c;
  std::string hints;

  auto* stack = app.add_subcommand("stack", "stack an event file into a tensor");
  stack->add_option("events", in_a, "event file")->required();
  common(stack, true);

  auto* fuse = app.add_subcommand("fuse", "hallucinate depth hints into a stereo pair");
  fuse->add_option("left", in_a, "left event file")->required();
  fuse->add_option("right", in_b, "right event file")->required();
  fuse->add_option("depth", in_c, "depth CSV (x,y,z_m,t_us)")->required();
  common(fuse, true);

  auto* match = app.add_subcommand("match", "block matching on two stack tensors");
  match->add_option("left", in_a, "left stack tensor")->required();
  match->add_option("right", in_b, "right stack tensor")->required();
  match->add_option("--hints", hints, "hints tensor for guided matching");
  common(match, true);

  auto* eval = app.add_subcommand("eval", "1PE / 2PE / MAE of a disparity tensor");
  eval->add_option("pred", in_a, "predicted disparity tensor")->required();
  eval->add_option("gt", in_b, "ground-truth disparity tensor")->required();
  common(eval, false);

  auto* synth = app.add_subcommand("synth", "render a synthetic stereo event scene");
  common(synth, true);

  auto* bench = app.add_subcommand("bench", "run a synthetic benchmark suite");
  common(bench, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config.empty()) apply_config_file(cfg, config);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    if (seed) cfg.seed = *seed;

    const std::optional<fs::path> out_opt = out_path.empty() ? std::nullopt : std::optional<fs::path>(out_path);
    if (stack->parsed()) {
      cmd_stack(in_a, cfg, out_path, out);
    } else if (fuse->parsed()) {
      cmd_fuse(in_a, in_b, in_c, cfg, out_path, out);
    } else if (match->parsed()) {
      cmd_match(in_a, in_b, hints.empty() ? std::nullopt : std::optional<fs::path>(hints), cfg, out_path, out);
    } else if (eval->parsed()) {
      cmd_eval(in_a, in_b, cfg, out_opt, out);
    } else if (synth->parsed()) {
      cmd_synth(cfg, out_path, out);
    } else if (bench->parsed()) {
      cmd_bench(cfg, out_opt, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace evfuse
