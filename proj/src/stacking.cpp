#include "evfuse/stacking.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evfuse {

namespace {

using u128 = unsigned __int128;

constexpr std::array<std::pair<Representation, std::string_view>, 7> kNames{{
    {Representation::histogram, "histogram"},
    {Representation::voxel_grid, "voxel"},
    {Representation::mdes, "mdes"},
    {Representation::tore, "tore"},
    {Representation::time_surface, "timesurface"},
    {Representation::tencode, "tencode"},
    {Representation::ergo, "ergo"},
}};

// Visit events inside the interval. Events are time ordered, so the bounds
// are found by binary search.
template <typename Fn>
void for_each_in(const EventHistory& h, const StereoRig& rig, TimeRange interval, Fn&& fn) {
  const auto events = h.events();
  auto it = std::lower_bound(events.begin(), events.end(), interval.begin,
                             [](const Event& e, Timestamp t) { return e.t < t; });
  for (; it != events.end() && it->t <= interval.end; ++it) {
    if (it->x >= rig.width || it->y >= rig.height) {
      throw std::out_of_range("event outside the sensor grid");
    }
    fn(*it);
  }
}

std::size_t pixel_index(const StereoRig& rig, const Event& e) {
  return static_cast<std::size_t>(e.y) * static_cast<std::size_t>(rig.width) + e.x;
}

// Latest event per pixel (last in stream order among the interval).
struct LatestMap {
  std::vector<Timestamp> t;
  std::vector<std::int8_t> p;  // 0 = none
};

LatestMap latest_events(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                        int polarity_filter = 0) {
  const auto n = static_cast<std::size_t>(rig.width) * static_cast<std::size_t>(rig.height);
  LatestMap m{std::vector<Timestamp>(n, 0), std::vector<std::int8_t>(n, 0)};
  for_each_in(h, rig, interval, [&](const Event& e) {
    if (polarity_filter != 0 && e.p != polarity_filter) return;
    const auto i = pixel_index(rig, e);
    m.t[i] = e.t;
    m.p[i] = e.p;
  });
  return m;
}

void check_polarity(const Event& e) {
  if (e.p != 1 && e.p != -1) throw std::invalid_argument("event polarity must be -1 or +1");
}

}  // namespace

std::string_view to_string(Representation r) {
  for (const auto& [rep, name] : kNames) {
    if (rep == r) return name;
  }
  return "unknown";
}

Representation parse_representation(std::string_view name) {
  for (const auto& [rep, n] : kNames) {
    if (n == name) return rep;
  }
  throw std::invalid_argument("unknown representation '" + std::string(name) + "'");
}

const std::vector<Representation>& all_representations() {
  static const std::vector<Representation> reps = [] {
    std::vector<Representation> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return reps;
}

std::vector<ErgoChannel> default_ergo_recipe() {
  std::vector<ErgoChannel> recipe;
  recipe.push_back({Representation::histogram, 0});
  recipe.push_back({Representation::histogram, 1});
  for (int b = 0; b < 4; ++b) recipe.push_back({Representation::voxel_grid, b, -1, 4});
  for (double tau : {10'000.0, 100'000.0}) {
    ErgoChannel ts{Representation::time_surface, 0, 1};
    ts.decay_us = tau;
    recipe.push_back(ts);
  }
  for (int l = 0; l < 3; ++l) recipe.push_back({Representation::mdes, l, -1, 4, 3});
  recipe.push_back({Representation::tencode, 1});
  return recipe;
}

void StackConfig::validate() const {
  if (bins < 1 || levels < 1 || queue < 1) {
    throw std::invalid_argument("stack bins, levels and queue must be >= 1");
  }
  if (levels > 62) throw std::invalid_argument("MDES levels must be <= 62");
  if (decay_us.empty()) throw std::invalid_argument("time surface needs at least one decay");
  for (double tau : decay_us) {
    if (!(tau > 0.0)) throw std::invalid_argument("time surface decay must be > 0");
  }
  if (!(tore_clamp_us > 0.0)) throw std::invalid_argument("TORE clamp must be > 0");
}

int channel_count(Representation r, const StackConfig& cfg) {
  switch (r) {
    case Representation::histogram: return 2;
    case Representation::voxel_grid: return cfg.bins;
    case Representation::mdes: return cfg.levels;
    case Representation::tore: return 2 * cfg.queue;
    case Representation::time_surface: return 2 * static_cast<int>(cfg.decay_us.size());
    case Representation::tencode: return 3;
    case Representation::ergo: return 12;
  }
  return 0;
}

Stack::Stack(Representation rep, int width, int height, int channels, TimeRange interval,
             double fill)
    : rep_(rep), width_(width), height_(height), channels_(channels), interval_(interval) {
  if (width < 0 || height < 0 || channels < 0) throw std::invalid_argument("negative stack shape");
  data_.assign(plane_size() * static_cast<std::size_t>(channels), fill);
}

TimeRange history_interval(const EventHistory& h) {
  return h.range().value_or(TimeRange{});
}

Stack stack_histogram(const EventHistory& h, const StereoRig& rig, TimeRange interval) {
  Stack s(Representation::histogram, rig.width, rig.height, 2, interval);
  auto pos = s.plane(0);
  auto neg = s.plane(1);
  for_each_in(h, rig, interval, [&](const Event& e) {
    check_polarity(e);
    const auto i = pixel_index(rig, e);
    if (e.p > 0) {
      pos[i] += 1.0;
    } else {
      neg[i] += 1.0;
    }
  });
  return s;
}

Stack stack_voxelgrid(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                      const StackConfig& cfg) {
  cfg.validate();
  const int bins = cfg.bins;
  Stack s(Representation::voxel_grid, rig.width, rig.height, bins, interval);
  const Timestamp span = interval.span();
  for_each_in(h, rig, interval, [&](const Event& e) {
    check_polarity(e);
    int bin = 0;
    if (span > 0) {
      const u128 scaled = static_cast<u128>(e.t - interval.begin) * static_cast<u128>(bins);
      bin = static_cast<int>(std::min<u128>(scaled / span, static_cast<u128>(bins - 1)));
    }
    s.plane(bin)[pixel_index(rig, e)] += static_cast<double>(e.p);
  });
  return s;
}

Stack stack_mdes(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg) {
  cfg.validate();
  Stack s(Representation::mdes, rig.width, rig.height, cfg.levels, interval, 0.5);
  const auto latest = latest_events(h, rig, interval);
  const u128 span = interval.span();
  for (std::size_t i = 0; i < latest.p.size(); ++i) {
    if (latest.p[i] == 0) continue;
    const double value = latest.p[i] > 0 ? 1.0 : 0.0;
    const u128 age = interval.end - latest.t[i];
    // Level l covers the most recent span / 2^l of the interval.
    for (int l = 0; l < cfg.levels; ++l) {
      if ((age << l) > span) break;
      s.plane(l)[i] = value;
    }
  }
  return s;
}

Stack stack_tore(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg) {
  cfg.validate();
  const int q = cfg.queue;
  Stack s(Representation::tore, rig.width, rig.height, 2 * q, interval);
  const auto pixels = static_cast<std::size_t>(rig.width) * static_cast<std::size_t>(rig.height);

  // Per pixel and polarity, a ring of the q most recent timestamps.
  std::vector<Timestamp> ring(pixels * 2 * static_cast<std::size_t>(q));
  std::vector<std::uint32_t> count(pixels * 2, 0);
  for_each_in(h, rig, interval, [&](const Event& e) {
    check_polarity(e);
    const std::size_t slot = pixel_index(rig, e) * 2 + (e.p > 0 ? 0 : 1);
    ring[slot * q + count[slot] % q] = e.t;
    ++count[slot];
  });

  const double clamp = std::log(cfg.tore_clamp_us + 1.0);
  if (cfg.tore_empty_as_oldest) std::fill(s.values().begin(), s.values().end(), clamp);
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int pol = 0; pol < 2; ++pol) {
      const std::size_t slot = i * 2 + pol;
      const std::uint32_t filled = std::min<std::uint32_t>(count[slot], q);
      for (std::uint32_t k = 0; k < filled; ++k) {
        // k = 0 is the most recent.
        const std::size_t pos = (count[slot] - 1 - k) % q;
        const double age = static_cast<double>(interval.end - ring[slot * q + pos]);
        const double v = std::min(std::max(std::log(age + 1.0), 0.0), clamp);
        s.plane(pol * q + static_cast<int>(k))[i] = v;
      }
    }
  }
  return s;
}

Stack stack_timesurface(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                        const StackConfig& cfg) {
  cfg.validate();
  const int taus = static_cast<int>(cfg.decay_us.size());
  Stack s(Representation::time_surface, rig.width, rig.height, 2 * taus, interval);
  for (int pol = 0; pol < 2; ++pol) {
    const auto latest = latest_events(h, rig, interval, pol == 0 ? 1 : -1);
    for (std::size_t i = 0; i < latest.p.size(); ++i) {
      if (latest.p[i] == 0) continue;
      const double age = static_cast<double>(interval.end - latest.t[i]);
      for (int k = 0; k < taus; ++k) {
        s.plane(pol * taus + k)[i] = std::exp(-age / cfg.decay_us[k]);
      }
    }
  }
  return s;
}

Stack stack_tencode(const EventHistory& h, const StereoRig& rig, TimeRange interval) {
  Stack s(Representation::tencode, rig.width, rig.height, 3, interval);
  const auto latest = latest_events(h, rig, interval);
  const double span = static_cast<double>(interval.span());
  for (std::size_t i = 0; i < latest.p.size(); ++i) {
    if (latest.p[i] == 0) continue;
    s.plane(0)[i] = latest.p[i] > 0 ? 1.0 : 0.0;
    s.plane(1)[i] = span > 0 ? static_cast<double>(latest.t[i] - interval.begin) / span : 1.0;
    s.plane(2)[i] = latest.p[i] < 0 ? 1.0 : 0.0;
  }
  return s;
}

namespace {

StackConfig primitive_config(const ErgoChannel& spec) {
  StackConfig cfg;
  cfg.bins = spec.bins;
  cfg.levels = spec.levels;
  cfg.queue = spec.queue;
  cfg.decay_us = {spec.decay_us};
  return cfg;
}

bool same_primitive(const ErgoChannel& a, const ErgoChannel& b) {
  if (a.source != b.source) return false;
  switch (a.source) {
    case Representation::voxel_grid: return a.bins == b.bins;
    case Representation::mdes: return a.levels == b.levels;
    case Representation::tore: return a.queue == b.queue;
    case Representation::time_surface: return a.decay_us == b.decay_us;
    default: return true;
  }
}

}  // namespace

Stack stack_ergo(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg) {
  if (cfg.ergo_recipe.size() != 12) {
    throw std::invalid_argument("ERGO recipe must list exactly 12 channels, got " +
                                std::to_string(cfg.ergo_recipe.size()));
  }
  Stack s(Representation::ergo, rig.width, rig.height, 12, interval);
  std::vector<std::pair<ErgoChannel, Stack>> cache;
  for (int c = 0; c < 12; ++c) {
    const ErgoChannel& spec = cfg.ergo_recipe[c];
    if (spec.source == Representation::ergo) {
      throw std::invalid_argument("ERGO recipe cannot reference ergo itself");
    }
    auto it = std::find_if(cache.begin(), cache.end(),
                           [&](const auto& entry) { return same_primitive(entry.first, spec); });
    if (it == cache.end()) {
      cache.emplace_back(spec, make_stack(spec.source, h, rig, interval, primitive_config(spec)));
      it = std::prev(cache.end());
    }
    const Stack& prim = it->second;
    if (spec.channel < 0 || spec.channel >= prim.channels() || spec.max_with >= prim.channels()) {
      throw std::invalid_argument("ERGO recipe channel index out of range");
    }
    auto out = s.plane(c);
    const auto a = prim.plane(spec.channel);
    if (spec.max_with >= 0) {
      const auto b = prim.plane(spec.max_with);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(a[i], b[i]);
    } else {
      std::copy(a.begin(), a.end(), out.begin());
    }
  }
  return s;
}

Stack make_stack(Representation rep, const EventHistory& h, const StereoRig& rig,
                 TimeRange interval, const StackConfig& cfg) {
  switch (rep) {
    case Representation::histogram: return stack_histogram(h, rig, interval);
    case Representation::voxel_grid: return stack_voxelgrid(h, rig, interval, cfg);
    case Representation::mdes: return stack_mdes(h, rig, interval, cfg);
    case Representation::tore: return stack_tore(h, rig, interval, cfg);
    case Representation::time_surface: return stack_timesurface(h, rig, interval, cfg);
    case Representation::tencode: return stack_tencode(h, rig, interval);
    case Representation::ergo: return stack_ergo(h, rig, interval, cfg);
  }
  throw std::invalid_argument("unknown representation");
}

RangeMode default_range_mode(Representation rep) {
  return rep == Representation::voxel_grid ? RangeMode::percentile(5.0, 95.0)
                                           : RangeMode::minmax();
}

ValueRange stack_range(const Stack& left, const Stack& right, const RangeMode& mode) {
  if (!left.same_shape(right) || left.representation() != right.representation()) {
    throw std::invalid_argument("stack_range: stacks differ in shape or representation");
  }
  ValueRange r;
  const auto a = left.values();
  const auto b = right.values();
  if (a.empty()) return {0.0, 1.0, true};

  if (mode.kind == RangeMode::Kind::minmax) {
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    r.lo = std::min(*amin, *bmin);
    r.hi = std::max(*amax, *bmax);
  } else {
    if (!(mode.p_lo >= 0.0 && mode.p_lo <= mode.p_hi && mode.p_hi <= 100.0)) {
      throw std::invalid_argument("percentiles must satisfy 0 <= lo <= hi <= 100");
    }
    std::vector<double> all;
    all.reserve(a.size() + b.size());
    all.insert(all.end(), a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    const auto n = all.size();
    auto rank = [n](double p) {
      const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) / 100.0));
      return std::min(k, n - 1);
    };
    const auto lo_k = rank(mode.p_lo);
    const auto hi_k = rank(mode.p_hi);
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(lo_k), all.end());
    r.lo = all[lo_k];
    // Everything right of lo_k is >= all[lo_k], so the second selection can
    // stay in that half.
    std::nth_element(all.begin() + static_cast<std::ptrdiff_t>(lo_k),
                     all.begin() + static_cast<std::ptrdiff_t>(hi_k), all.end());
    r.hi = all[hi_k];
  }
  if (r.lo == r.hi) {
    r.hi = r.lo + 1.0;
    r.widened = true;
  }
  return r;
}

}  // namespace evfuse
