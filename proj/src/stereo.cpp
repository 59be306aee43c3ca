#include "evfuse/stereo.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace evfuse {

namespace {

int clamp_index(long v, int n) { return static_cast<int>(std::clamp<long>(v, 0, n - 1)); }

// In-place mean filter with border clamping, separable.
void box_mean(std::vector<double>& img, int w, int h, int radius) {
  std::vector<double> tmp(img.size());
  std::vector<double> prefix;
  const int n = 2 * radius + 1;

  prefix.resize(static_cast<std::size_t>(w + 2 * radius + 1));
  for (int y = 0; y < h; ++y) {
    const double* row = img.data() + static_cast<std::size_t>(y) * w;
    prefix[0] = 0.0;
    for (int i = 0; i < w + 2 * radius; ++i) {
      prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + row[clamp_index(i - radius, w)];
    }
    double* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) out[x] = prefix[static_cast<std::size_t>(x + n)] - prefix[static_cast<std::size_t>(x)];
  }

  prefix.resize(static_cast<std::size_t>(h + 2 * radius + 1));
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0.0;
    for (int i = 0; i < h + 2 * radius; ++i) {
      prefix[static_cast<std::size_t>(i) + 1] =
          prefix[static_cast<std::size_t>(i)] + tmp[static_cast<std::size_t>(clamp_index(i - radius, h)) * w + x];
    }
    for (int y = 0; y < h; ++y) {
      img[static_cast<std::size_t>(y) * w + x] =
          (prefix[static_cast<std::size_t>(y + n)] - prefix[static_cast<std::size_t>(y)]) / (n * n);
    }
  }
}

constexpr int kMaxCensusWindow = 11;
using CensusBits = std::array<std::uint64_t, 2>;

std::vector<CensusBits> census(const Stack& s, int c, int radius) {
  const int w = s.width();
  const int h = s.height();
  std::vector<CensusBits> sig(static_cast<std::size_t>(w) * h, CensusBits{0, 0});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double centre = s.at(x, y, c);
      CensusBits bits{0, 0};
      int bit = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (s.at(clamp_index(x + dx, w), clamp_index(y + dy, h), c) > centre) {
            bits[static_cast<std::size_t>(bit / 64)] |= std::uint64_t{1} << (bit % 64);
          }
          ++bit;
        }
      }
      sig[static_cast<std::size_t>(y) * w + x] = bits;
    }
  }
  return sig;
}

}  // namespace

CostVolume::CostVolume(int width, int height, int disparities, float fill)
    : width_(width), height_(height), disparities_(disparities) {
  if (width < 0 || height < 0 || disparities < 0) throw std::invalid_argument("negative cost volume shape");
  data_.assign(slice_size() * static_cast<std::size_t>(disparities), fill);
}

DisparityMap::DisparityMap(int width, int height)
    : width_(width),
      height_(height),
      value_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0),
      valid_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

std::size_t DisparityMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), 1));
}

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

CostVolume build_cost_volume(const Stack& left, const Stack& right, int window, int disparities,
                             CostMetric metric) {
  if (!left.same_shape(right) || left.representation() != right.representation()) {
    throw std::invalid_argument("build_cost_volume: stacks differ in shape or representation");
  }
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("matching window must be odd");
  if (disparities < 1) throw std::invalid_argument("need at least one disparity hypothesis");
  const int w = left.width();
  const int h = left.height();
  const int channels = left.channels();
  const int radius = window / 2;
  CostVolume volume(w, h, disparities);
  if (w == 0 || h == 0) return volume;

  std::vector<double> plane(static_cast<std::size_t>(w) * h);
  if (metric == CostMetric::sad) {
    for (int d = 0; d < disparities; ++d) {
      std::fill(plane.begin(), plane.end(), 0.0);
      for (int c = 0; c < channels; ++c) {
        const auto l = left.plane(c);
        const auto r = right.plane(c);
        for (int y = 0; y < h; ++y) {
          const std::size_t row = static_cast<std::size_t>(y) * w;
          for (int x = 0; x < w; ++x) {
            plane[row + x] += std::abs(l[row + x] - r[row + clamp_index(x - d, w)]);
          }
        }
      }
      if (channels > 0) {
        for (double& v : plane) v /= channels;
      }
      box_mean(plane, w, h, radius);
      std::transform(plane.begin(), plane.end(), volume.slice(d).begin(),
                     [](double v) { return static_cast<float>(v); });
    }
    return volume;
  }

  if (window > kMaxCensusWindow) throw std::invalid_argument("census window must be <= 11");
  const int bits = window * window - 1;
  std::vector<std::vector<CensusBits>> sig_l;
  std::vector<std::vector<CensusBits>> sig_r;
  for (int c = 0; c < channels; ++c) {
    sig_l.push_back(census(left, c, radius));
    sig_r.push_back(census(right, c, radius));
  }
  for (int d = 0; d < disparities; ++d) {
    std::fill(plane.begin(), plane.end(), 0.0);
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
          const auto& a = sig_l[c][row + x];
          const auto& b = sig_r[c][row + clamp_index(x - d, w)];
          plane[row + x] += std::popcount(a[0] ^ b[0]) + std::popcount(a[1] ^ b[1]);
        }
      }
    }
    if (channels > 0 && bits > 0) {
      for (double& v : plane) v /= static_cast<double>(channels) * bits;
    }
    box_mean(plane, w, h, radius);
    std::transform(plane.begin(), plane.end(), volume.slice(d).begin(),
                   [](double v) { return static_cast<float>(v); });
  }
  return volume;
}

CostVolume guided_modulate(const CostVolume& volume, const SparseDisparityGrid& grid,
                           double lambda, double width) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("guided lambda must be in [0, 1)");
  if (!(width > 0.0)) throw std::invalid_argument("guided width must be > 0");
  if (grid.width() != volume.width() || grid.height() != volume.height()) {
    throw std::invalid_argument("guided_modulate: hint grid does not match the volume");
  }
  CostVolume out = volume;
  if (lambda == 0.0) return out;
  for (const Hint& hint : valid_hints(grid)) {
    for (int d = 0; d < out.disparities(); ++d) {
      const double diff = d - hint.d;
      const double gain = 1.0 - lambda * std::exp(-(diff * diff) / (2.0 * width * width));
      float& c = out.at(hint.x, hint.y, d);
      c = static_cast<float>(c * gain);
    }
  }
  return out;
}

DisparityMap wta(const CostVolume& volume) {
  DisparityMap out(volume.width(), volume.height());
  if (volume.disparities() == 0) return out;
  for (int y = 0; y < volume.height(); ++y) {
    for (int x = 0; x < volume.width(); ++x) {
      int best = 0;
      float best_cost = volume.at(x, y, 0);
      for (int d = 1; d < volume.disparities(); ++d) {
        const float c = volume.at(x, y, d);
        if (c < best_cost) {
          best_cost = c;
          best = d;
        }
      }
      out.set(x, y, best);
    }
  }
  return out;
}

void MetricsAccumulator::add(double abs_error) {
  ++pixels_;
  if (abs_error > 1.0) ++over_one_;
  if (abs_error > 2.0) ++over_two_;
  abs_sum_ += abs_error;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  pixels_ += other.pixels_;
  over_one_ += other.over_one_;
  over_two_ += other.over_two_;
  abs_sum_ += other.abs_sum_;
}

MetricsReport MetricsAccumulator::report(std::string label) const {
  MetricsReport r;
  r.label = std::move(label);
  r.pixels = pixels_;
  if (pixels_ == 0) return r;
  const auto n = static_cast<double>(pixels_);
  r.one_pe = 100.0 * static_cast<double>(over_one_) / n;
  r.two_pe = 100.0 * static_cast<double>(over_two_) / n;
  r.mae = abs_sum_ / n;
  return r;
}

MetricsAccumulator accumulate(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height() || mask.width != gt.width() ||
      mask.height != gt.height()) {
    throw std::invalid_argument("evaluate: prediction, ground truth and mask differ in shape");
  }
  MetricsAccumulator acc;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!mask.at(x, y)) continue;
      if (!gt.valid(x, y)) throw std::invalid_argument("evaluate: mask covers invalid ground truth");
      acc.add(std::abs(pred.at(x, y) - gt.at(x, y)));
    }
  }
  return acc;
}

MetricsReport evaluate(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask,
                       std::string label) {
  const MetricsAccumulator acc = accumulate(pred, gt, mask);
  if (acc.pixels() == 0) throw std::invalid_argument("evaluate: empty mask");
  return acc.report(std::move(label));
}

PixelMask gt_mask(const DisparityMap& gt) {
  PixelMask m(gt.width(), gt.height());
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) m.set(x, y, gt.valid(x, y));
  }
  return m;
}

}  // namespace evfuse
