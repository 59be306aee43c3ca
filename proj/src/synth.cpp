#include "evfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evfuse/random.hpp"

namespace evfuse {

namespace {

constexpr double kDot = 1.0;
constexpr double kBase = 0.25;
constexpr double kFlat = 0.5;  // shared by every textureless region
constexpr double kMaxStepPx = 0.2;

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double hash_unit(std::uint64_t seed, std::uint64_t a, std::int64_t b, std::int64_t c) {
  std::uint64_t z = mix(seed ^ mix(a));
  z = mix(z ^ static_cast<std::uint64_t>(b));
  z = mix(z ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double seconds_between(Timestamp t, Timestamp ref) {
  return (static_cast<double>(t) - static_cast<double>(ref)) * 1e-6;
}

class Texture {
 public:
  explicit Texture(const SceneSpec& spec) : spec_(spec) {}

  bool textureless(int plane, std::int64_t texel, int y) const {
    const auto blk = spec_.textureless_block;
    const std::int64_t bx = texel >= 0 ? texel / blk : (texel - blk + 1) / blk;
    return hash_unit(spec_.seed, 2 * static_cast<std::uint64_t>(plane) + 1, bx, y / blk) <
           spec_.textureless_fraction;
  }

  double texel(int plane, std::int64_t u, int y) const {
    if (textureless(plane, u, y)) return kFlat;
    return hash_unit(spec_.seed, 2 * static_cast<std::uint64_t>(plane) + 2, u, y) < spec_.dot_density
               ? kDot
               : kBase;
  }

  double sample(int plane, double u, int y) const {
    const double f = std::floor(u);
    const auto i = static_cast<std::int64_t>(f);
    const double frac = u - f;
    return (1.0 - frac) * texel(plane, i, y) + frac * texel(plane, i + 1, y);
  }

 private:
  SceneSpec spec_;
};

std::vector<ScenePlane> place_planes(const SceneSpec& spec) {
  Rng rng = make_rng(spec.seed, 11);
  std::vector<ScenePlane> planes;
  planes.push_back({spec.plane_disparities.front(), -1e18, 1e18, 0, spec.height});
  for (std::size_t i = 1; i < spec.plane_disparities.size(); ++i) {
    const double pw = uniform(rng, 0.3, 0.5) * spec.width;
    const int ph = static_cast<int>(uniform(rng, 0.3, 0.6) * spec.height);
    const double x0 = uniform(rng, 0.0, spec.width - pw);
    const int y0 = static_cast<int>(uniform(rng, 0.0, static_cast<double>(spec.height - ph)));
    planes.push_back({spec.plane_disparities[i], x0, x0 + pw, y0, y0 + ph});
  }
  return planes;
}

// Threshold crossings of one pixel between two samples of its log intensity.
void emit_crossings(std::vector<Event>& out, std::uint16_t x, std::uint16_t y, double& ref,
                    double l_prev, double l_now, Timestamp t_prev, Timestamp t_now, double c) {
  while (true) {
    const double target = l_now >= ref ? ref + c : ref - c;
    const bool up = l_now >= ref;
    if ((up && target > l_now) || (!up && target < l_now)) return;
    const double frac = l_now == l_prev ? 1.0 : (target - l_prev) / (l_now - l_prev);
    const double span = static_cast<double>(t_now - t_prev);
    const auto t = t_prev + static_cast<Timestamp>(std::llround(std::clamp(frac, 0.0, 1.0) * span));
    out.push_back({x, y, static_cast<std::int8_t>(up ? 1 : -1), t});
    ref = target;
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1 || width > 65535 || height > 65535) {
    throw std::invalid_argument("scene size out of range");
  }
  if (plane_disparities.empty()) throw std::invalid_argument("scene needs at least one plane");
  if (!(textureless_fraction >= 0.0 && textureless_fraction <= 1.0)) {
    throw std::invalid_argument("textureless fraction must be in [0, 1]");
  }
  if (!(dot_density >= 0.0 && dot_density <= 1.0)) throw std::invalid_argument("dot density must be in [0, 1]");
  if (textureless_block < 1) throw std::invalid_argument("textureless block must be >= 1");
  if (!(contrast_threshold > 0.0)) throw std::invalid_argument("contrast threshold must be > 0");
  const double drift = std::abs(disparity_rate_px_s) * static_cast<double>(duration_us) * 1e-6;
  for (double d : plane_disparities) {
    if (!(d >= 0.0) || d >= d_max) throw std::invalid_argument("plane disparity must be in [0, d_max)");
    if (d - drift < 0.0) throw std::invalid_argument("disparity drift makes a plane disparity negative");
  }
  rig().validate();
}

StereoRig SceneSpec::rig() const { return {baseline_m, focal_px, width, height, d_max}; }

DepthField::DepthField(const SceneSpec& spec, std::vector<ScenePlane> planes)
    : rig_(spec.rig()),
      t_d_(spec.start_us + spec.duration_us),
      velocity_(spec.velocity_px_s),
      rate_(spec.disparity_rate_px_s),
      planes_(std::move(planes)) {}

double DepthField::plane_disparity(int plane, Timestamp t) const {
  return planes_[static_cast<std::size_t>(plane)].disparity + rate_ * seconds_between(t, t_d_);
}

double DepthField::texture_u(int plane, double x, Timestamp t) const {
  const double dt = seconds_between(t, t_d_);
  return x - velocity_ * dt - 0.5 * (plane_disparity(plane, t) - planes_[static_cast<std::size_t>(plane)].disparity);
}

bool DepthField::covers(int plane, double u, int y) const {
  const auto& p = planes_[static_cast<std::size_t>(plane)];
  return y >= p.y0 && y < p.y1 && u >= p.x0 && u < p.x1;
}

int DepthField::visible_plane(int x, int y, Timestamp t) const {
  int best = 0;
  for (int i = 1; i < static_cast<int>(planes_.size()); ++i) {
    if (covers(i, texture_u(i, x, t), y) && plane_disparity(i, t) > plane_disparity(best, t)) best = i;
  }
  return best;
}

int DepthField::visible_plane_right(int x, int y, Timestamp t) const {
  int best = 0;
  for (int i = 1; i < static_cast<int>(planes_.size()); ++i) {
    const double xl = x + plane_disparity(i, t);
    if (covers(i, texture_u(i, xl, t), y) && plane_disparity(i, t) > plane_disparity(best, t)) best = i;
  }
  return best;
}

double DepthField::disparity_at(int x, int y, Timestamp t) const {
  return plane_disparity(visible_plane(x, y, t), t);
}

double DepthField::depth_at(int x, int y, Timestamp t) const {
  return rig_.baseline_m * rig_.focal_px / disparity_at(x, y, t);
}

SynthScene synth_scene(const SceneSpec& spec) {
  spec.validate();
  const Texture texture(spec);
  SynthScene scene;
  scene.field = DepthField(spec, place_planes(spec));
  scene.t_d = scene.field.t_d();
  const DepthField& field = scene.field;
  const int w = spec.width;
  const int h = spec.height;

  scene.gt = DisparityMap(w, h);
  scene.textureless = PixelMask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = field.visible_plane(x, y, scene.t_d);
      const double d = field.plane_disparity(p, scene.t_d);
      if (x - d < 0.0) continue;
      scene.gt.set(x, y, d);
      const double u = field.texture_u(p, x, scene.t_d);
      scene.textureless.set(x, y, texture.textureless(p, static_cast<std::int64_t>(std::floor(u)), y));
    }
  }

  const double motion_px = (std::abs(spec.velocity_px_s) + std::abs(spec.disparity_rate_px_s)) *
                           static_cast<double>(spec.duration_us) * 1e-6;
  const int steps = spec.duration_us == 0 ? 0 : std::max(1, static_cast<int>(std::ceil(motion_px / kMaxStepPx)));

  auto log_intensity = [&](bool right, int x, int y, Timestamp t) {
    const int p = right ? field.visible_plane_right(x, y, t) : field.visible_plane(x, y, t);
    const double xl = right ? x + field.plane_disparity(p, t) : x;
    return std::log(texture.sample(p, field.texture_u(p, xl, t), y));
  };

  for (const bool right : {false, true}) {
    std::vector<Event> events;
    std::vector<Timestamp> times(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
      times[static_cast<std::size_t>(i)] =
          spec.start_us + (steps == 0 ? 0 : spec.duration_us * static_cast<Timestamp>(i) / static_cast<Timestamp>(steps));
    }
    for (int y = 0; y < h && steps > 0; ++y) {
      for (int x = 0; x < w; ++x) {
        double prev = log_intensity(right, x, y, times[0]);
        double ref = prev;
        for (int i = 1; i <= steps; ++i) {
          const double now = log_intensity(right, x, y, times[static_cast<std::size_t>(i)]);
          emit_crossings(events, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), ref, prev, now,
                         times[static_cast<std::size_t>(i) - 1], times[static_cast<std::size_t>(i)],
                         spec.contrast_threshold);
          prev = now;
        }
      }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    (right ? scene.right : scene.left) = EventHistory(std::move(events), right ? Side::right : Side::left);
  }
  return scene;
}

std::vector<DepthMeasurement> lidar_sample(const DepthField& field, const LidarSpec& spec, Timestamp t_z) {
  if (spec.lines < 1) throw std::invalid_argument("LiDAR needs at least one line");
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) throw std::invalid_argument("LiDAR density must be in [0, 1]");
  const StereoRig& rig = field.rig();
  const int lines = std::min(spec.lines, rig.height);
  const auto per_line = static_cast<std::size_t>(std::lround(spec.density * rig.width));

  Rng rng = make_rng(spec.seed, 21);
  std::vector<int> columns(static_cast<std::size_t>(rig.width));
  std::vector<DepthMeasurement> out;
  for (int i = 0; i < lines; ++i) {
    const int y = static_cast<int>((static_cast<double>(i) + 0.5) * rig.height / lines);
    std::iota(columns.begin(), columns.end(), 0);
    // Partial Fisher-Yates: the first per_line entries are the sample.
    for (std::size_t k = 0; k < per_line; ++k) {
      const auto j = k + uniform_index(rng, columns.size() - k);
      std::swap(columns[k], columns[j]);
    }
    std::vector<int> chosen(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(per_line));
    std::sort(chosen.begin(), chosen.end());
    for (int x : chosen) out.push_back({x, y, field.depth_at(x, y, t_z), t_z});
  }
  return out;
}

}  // namespace evfuse
