#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evfuse/event.hpp"
#include "evfuse/stacking.hpp"

namespace evfuse {

/// Matching costs over D disparity hypotheses, stored (d, y, x). Lower is better.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int disparities, float fill = 0.0F);

  int width() const { return width_; }
  int height() const { return height_; }
  int disparities() const { return disparities_; }

  float& at(int x, int y, int d) { return data_[offset(x, y, d)]; }
  float at(int x, int y, int d) const { return data_[offset(x, y, d)]; }
  std::span<float> slice(int d) {
    return std::span<float>(data_).subspan(slice_size() * static_cast<std::size_t>(d), slice_size());
  }
  std::span<const float> values() const { return data_; }

  friend bool operator==(const CostVolume&, const CostVolume&) = default;

 private:
  std::size_t slice_size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t offset(int x, int y, int d) const {
    return slice_size() * static_cast<std::size_t>(d) +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int disparities_ = 0;
  std::vector<float> data_;
};

/// Per-pixel disparity with a validity mask.
class DisparityMap {
 public:
  DisparityMap() = default;
  DisparityMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const { return value_[index(x, y)]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
  void set(int x, int y, double d) {
    value_[index(x, y)] = d;
    valid_[index(x, y)] = 1;
  }
  void invalidate(int x, int y) {
    value_[index(x, y)] = 0.0;
    valid_[index(x, y)] = 0;
  }
  std::size_t valid_count() const;

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> value_;
  std::vector<std::uint8_t> valid_;
};

/// Boolean pixel mask, row-major.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  PixelMask() = default;
  PixelMask(int w, int h, bool value = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), value ? 1 : 0) {}
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] != 0; }
  void set(int x, int y, bool v = true) {
    bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] = v ? 1 : 0;
  }
  std::size_t count() const;
};

enum class CostMetric { sad, census };

/// cost(x, y, d): mean over a window x window neighbourhood and all channels
/// of |L(x, y) - R(x - d, y)|. Out-of-image coordinates are clamped to the
/// border, both for the window and for x - d.
///
/// The census variant compares per-channel census signatures (neighbour >
/// centre over the same window) by Hamming distance, normalised per bit.
CostVolume build_cost_volume(const Stack& left, const Stack& right, int window, int disparities,
                             CostMetric metric = CostMetric::sad);

/// At every valid hint, cost *= 1 - lambda * exp(-(d - hint)^2 / (2 width^2)).
CostVolume guided_modulate(const CostVolume& volume, const SparseDisparityGrid& grid,
                           double lambda, double width);

/// Per-pixel argmin over d; ties go to the smaller disparity.
DisparityMap wta(const CostVolume& volume);

struct MetricsReport {
  double one_pe = 0.0;  // % of pixels with error > 1
  double two_pe = 0.0;  // % of pixels with error > 2
  double mae = 0.0;
  std::size_t pixels = 0;
  std::string label = "all";
};

/// Pools errors over several evaluations so that rates are pixel-weighted.
class MetricsAccumulator {
 public:
  void add(double abs_error);
  void merge(const MetricsAccumulator& other);
  MetricsReport report(std::string label) const;
  std::size_t pixels() const { return pixels_; }

 private:
  std::size_t pixels_ = 0;
  std::size_t over_one_ = 0;
  std::size_t over_two_ = 0;
  double abs_sum_ = 0.0;
};

/// 1PE / 2PE / MAE over the masked pixels. The mask must be a subset of the
/// ground-truth validity and non-empty; throws std::invalid_argument otherwise.
MetricsReport evaluate(const DisparityMap& pred, const DisparityMap& gt, const PixelMask& mask,
                       std::string label = "all");
MetricsAccumulator accumulate(const DisparityMap& pred, const DisparityMap& gt,
                              const PixelMask& mask);

/// Every valid ground-truth pixel.
PixelMask gt_mask(const DisparityMap& gt);

}  // namespace evfuse
