#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "evfuse/event.hpp"
#include "evfuse/stacking.hpp"
#include "evfuse/stereo.hpp"

namespace evfuse {

/// Malformed input. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Event files, little-endian:
//   magic "EVFSEVT\0" | u32 version | u32 width | u32 height
//   then 13-byte records: u64 t | u16 x | u16 y | i8 p
inline constexpr char kEventMagic[8] = {'E', 'V', 'F', 'S', 'E', 'V', 'T', '\0'};
inline constexpr std::uint32_t kEventVersion = 1;
inline constexpr std::size_t kEventHeaderSize = 20;
inline constexpr std::size_t kEventRecordSize = 13;

struct EventFile {
  int width = 0;
  int height = 0;
  std::vector<Event> events;
};

void write_events(std::ostream& os, const EventFile& file);
/// Checks magic, version, record size, polarity, sensor bounds and time order.
EventFile read_events(std::istream& is);
void save_events(const std::filesystem::path& path, const EventFile& file);
EventFile load_events(const std::filesystem::path& path);

/// Text events, one `t,x,y,p` per line. A header line is skipped, p may be
/// 0/1 or -1/+1. Sorted stably by timestamp on import.
std::vector<Event> read_events_csv(std::istream& is);

/// CSV with header `x,y,z_m,t_us`.
void write_depth_csv(std::ostream& os, const std::vector<DepthMeasurement>& points);
std::vector<DepthMeasurement> read_depth_csv(std::istream& is);
void save_depth_csv(const std::filesystem::path& path, const std::vector<DepthMeasurement>& points);
std::vector<DepthMeasurement> load_depth_csv(const std::filesystem::path& path);

/// Dense float tensor: text header then C*H*W little-endian float32, (c, y, x).
///
///   EVFSTNS 1
///   tag <name>
///   dims <C> <H> <W>
///   interval <begin> <end>
///   data
struct Tensor {
  std::string tag;
  int channels = 0;
  int height = 0;
  int width = 0;
  TimeRange interval{};
  std::vector<float> data;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

Tensor to_tensor(const Stack& s);
Stack to_stack(const Tensor& t);

/// One channel, NaN where invalid. Tag "disparity".
Tensor to_tensor(const DisparityMap& d);
DisparityMap to_disparity(const Tensor& t);

/// One channel, 1 inside the mask. Tag "mask".
Tensor to_tensor(const PixelMask& m);
PixelMask to_mask(const Tensor& t);

/// One channel, NaN where no valid hint. Tag "hints".
Tensor to_tensor(const SparseDisparityGrid& g);
SparseDisparityGrid to_grid(const Tensor& t);

}  // namespace evfuse
