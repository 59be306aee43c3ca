#include "evfuse/vsh.hpp"

#include <stdexcept>
#include <vector>

#include "evfuse/random.hpp"

namespace evfuse {

namespace {

double blend(double old_value, double pattern, double alpha) {
  if (alpha == 0.0) return old_value;
  if (alpha == 1.0) return pattern;
  return alpha * pattern + (1.0 - alpha) * old_value;
}

}  // namespace

void VshConfig::validate() const {
  if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("VSH patch size must be odd");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("VSH alpha must be in [0, 1]");
}

VshResult vsh_inject(const Stack& left, const Stack& right, const SparseDisparityGrid& grid,
                     const VshConfig& cfg) {
  cfg.validate();
  if (!left.same_shape(right) || left.representation() != right.representation()) {
    throw std::invalid_argument("vsh_inject: stacks differ in shape or representation");
  }
  if (grid.width() != left.width() || grid.height() != left.height()) {
    throw std::invalid_argument("vsh_inject: hint grid does not match the stacks");
  }

  VshResult out{left, right,
                stack_range(left, right, cfg.range.value_or(default_range_mode(left.representation())))};
  const int w = left.width();
  const int h = left.height();
  const int channels = left.channels();
  const int radius = cfg.patch / 2;
  const int cells = cfg.patch * cfg.patch;
  const int draws_per_channel = cfg.uniform_patch ? 1 : cells;
  const int channel_draws = cfg.share_channels ? 1 : channels;

  Rng rng = make_rng(cfg.seed);
  std::vector<double> pattern(static_cast<std::size_t>(draws_per_channel * channel_draws));

  for (const Hint& hint : valid_hints(grid)) {
    const long xr = round_column(hint.x - hint.d);
    if (xr < 0 || xr >= w) {
      ++out.hints_skipped;
      continue;
    }
    ++out.hints_used;
    // Drawn before clipping so the draw sequence depends only on which hints
    // are usable, never on the image border.
    for (double& v : pattern) v = uniform(rng, out.range.lo, out.range.hi);

    int cell = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx, ++cell) {
        const int y = hint.y + dy;
        const int xl = hint.x + dx;
        const long xrr = xr + dx;
        if (y < 0 || y >= h || xl < 0 || xl >= w || xrr < 0 || xrr >= w) continue;
        ++out.cells_written;
        const int draw_cell = cfg.uniform_patch ? 0 : cell;
        for (int c = 0; c < channels; ++c) {
          const int draw_channel = cfg.share_channels ? 0 : c;
          const double a = pattern[static_cast<std::size_t>(draw_channel * draws_per_channel + draw_cell)];
          double& l = out.left.at(xl, y, c);
          double& r = out.right.at(static_cast<int>(xrr), y, c);
          l = blend(l, a, cfg.alpha);
          r = blend(r, a, cfg.alpha);
        }
      }
    }
  }
  return out;
}

}  // namespace evfuse
