#include "evfuse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace evfuse {

namespace {

constexpr std::string_view kTensorMagic = "EVFSTNS";
constexpr int kTensorVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | p[i]);
  return static_cast<T>(u);
}

std::string slurp(std::istream& is) {
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  return f;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// Line cursor over a text buffer that remembers byte offsets.
struct Lines {
  const std::string& text;
  std::size_t pos = 0;

  bool next(std::string_view& line, std::size_t& start) {
    if (pos >= text.size()) return false;
    start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    line = std::string_view(text).substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return true;
  }
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

void write_events(std::ostream& os, const EventFile& file) {
  if (file.width < 0 || file.height < 0) throw std::invalid_argument("negative sensor size");
  std::string buf;
  buf.reserve(kEventHeaderSize + kEventRecordSize * file.events.size());
  buf.append(kEventMagic, sizeof(kEventMagic));
  put_le<std::uint32_t>(buf, kEventVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(file.width));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(file.height));
  for (const Event& e : file.events) {
    put_le<std::uint64_t>(buf, e.t);
    put_le<std::uint16_t>(buf, e.x);
    put_le<std::uint16_t>(buf, e.y);
    put_le<std::int8_t>(buf, e.p);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EventFile read_events(std::istream& is) {
  const std::string buf = slurp(is);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < sizeof(kEventMagic)) throw FormatError("truncated event file header", buf.size());
  for (std::size_t i = 0; i < sizeof(kEventMagic); ++i) {
    if (buf[i] != kEventMagic[i]) throw FormatError("bad event file magic", i);
  }
  if (buf.size() < kEventHeaderSize) throw FormatError("truncated event file header", buf.size());
  const auto version = get_le<std::uint32_t>(p + 8);
  if (version != kEventVersion) {
    throw FormatError("unsupported event file version " + std::to_string(version), 8);
  }
  EventFile file;
  const auto w = get_le<std::uint32_t>(p + 12);
  const auto h = get_le<std::uint32_t>(p + 16);
  if (w > 65536 || h > 65536) throw FormatError("sensor size out of range", 12);
  file.width = static_cast<int>(w);
  file.height = static_cast<int>(h);

  const std::size_t body = buf.size() - kEventHeaderSize;
  if (body % kEventRecordSize != 0) {
    throw FormatError("truncated event record", kEventHeaderSize + body / kEventRecordSize * kEventRecordSize);
  }
  file.events.resize(body / kEventRecordSize);
  Timestamp last = 0;
  for (std::size_t i = 0; i < file.events.size(); ++i) {
    const std::size_t at = kEventHeaderSize + i * kEventRecordSize;
    Event& e = file.events[i];
    e.t = get_le<std::uint64_t>(p + at);
    e.x = get_le<std::uint16_t>(p + at + 8);
    e.y = get_le<std::uint16_t>(p + at + 10);
    e.p = get_le<std::int8_t>(p + at + 12);
    if (e.p != 1 && e.p != -1) throw FormatError("polarity must be -1 or +1", at + 12);
    if (e.x >= w || e.y >= h) throw FormatError("event outside the sensor", at + 8);
    if (i > 0 && e.t < last) throw FormatError("events out of time order", at);
    last = e.t;
  }
  return file;
}

void save_events(const std::filesystem::path& path, const EventFile& file) {
  auto f = open_out(path);
  write_events(f, file);
  finish(f, path);
}

EventFile load_events(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_events(f);
}

std::vector<Event> read_events_csv(std::istream& is) {
  const std::string text = slurp(is);
  Lines lines{text};
  std::string_view line;
  std::size_t start = 0;
  std::vector<Event> events;
  bool first = true;
  while (lines.next(line, start)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto cells = split(line, ',');
    std::uint64_t t = 0;
    unsigned x = 0;
    unsigned y = 0;
    int p = 0;
    const bool ok = cells.size() == 4 && parse_number(cells[0], t) && parse_number(cells[1], x) &&
                    parse_number(cells[2], y) && parse_number(cells[3], p);
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw FormatError("expected t,x,y,p", start);
    }
    first = false;
    if (x > 0xFFFF || y > 0xFFFF) throw FormatError("coordinate out of range", start);
    if (p != 0 && p != 1 && p != -1) throw FormatError("polarity must be 0/1 or -1/+1", start);
    events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                      static_cast<std::int8_t>(p == 0 ? -1 : p), t});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return events;
}

void write_depth_csv(std::ostream& os, const std::vector<DepthMeasurement>& points) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << "x,y,z_m,t_us\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& m : points) out << m.x << ',' << m.y << ',' << m.z_m << ',' << m.t_z << '\n';
  os << out.str();
}

std::vector<DepthMeasurement> read_depth_csv(std::istream& is) {
  const std::string text = slurp(is);
  Lines lines{text};
  std::string_view line;
  std::size_t start = 0;
  std::vector<DepthMeasurement> points;
  bool header = false;
  while (lines.next(line, start)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (!header) {
      if (cells.size() != 4 || trim(cells[0]) != "x" || trim(cells[1]) != "y" || trim(cells[2]) != "z_m" ||
          trim(cells[3]) != "t_us") {
        throw FormatError("depth file header must be x,y,z_m,t_us", start);
      }
      header = true;
      continue;
    }
    DepthMeasurement m;
    if (cells.size() != 4 || !parse_number(cells[0], m.x) || !parse_number(cells[1], m.y) ||
        !parse_number(cells[2], m.z_m) || !parse_number(cells[3], m.t_z)) {
      throw FormatError("expected x,y,z_m,t_us", start);
    }
    points.push_back(m);
  }
  if (!header && !text.empty()) throw FormatError("depth file header must be x,y,z_m,t_us", 0);
  return points;
}

void save_depth_csv(const std::filesystem::path& path, const std::vector<DepthMeasurement>& points) {
  auto f = open_out(path);
  write_depth_csv(f, points);
  finish(f, path);
}

std::vector<DepthMeasurement> load_depth_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_depth_csv(f);
}

void write_tensor(std::ostream& os, const Tensor& t) {
  if (t.tag.empty() || t.tag.find_first_of(" \t\r\n") != std::string::npos) {
    throw std::invalid_argument("tensor tag must be a single word");
  }
  const std::size_t n = static_cast<std::size_t>(t.channels) * static_cast<std::size_t>(t.height) *
                        static_cast<std::size_t>(t.width);
  if (t.channels < 0 || t.height < 0 || t.width < 0 || t.data.size() != n) {
    throw std::invalid_argument("tensor data does not match its dims");
  }
  std::string buf = std::string(kTensorMagic) + " " + std::to_string(kTensorVersion) + "\n";
  buf += "tag " + t.tag + "\n";
  buf += "dims " + std::to_string(t.channels) + " " + std::to_string(t.height) + " " + std::to_string(t.width) + "\n";
  buf += "interval " + std::to_string(t.interval.begin) + " " + std::to_string(t.interval.end) + "\n";
  buf += "data\n";
  buf.reserve(buf.size() + 4 * n);
  for (float v : t.data) {
    if (std::isnan(v)) v = std::numeric_limits<float>::quiet_NaN();
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    put_le<std::uint32_t>(buf, bits);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Tensor read_tensor(std::istream& is) {
  const std::string buf = slurp(is);
  Lines lines{buf};
  std::string_view line;
  std::size_t start = 0;
  auto expect = [&](std::string_view key) -> std::vector<std::string_view> {
    if (!lines.next(line, start)) throw FormatError("truncated tensor header", buf.size());
    auto words = split(line, ' ');
    if (words.empty() || words[0] != key) {
      throw FormatError("expected '" + std::string(key) + "' in tensor header", start);
    }
    words.erase(words.begin());
    return words;
  };

  if (buf.compare(0, kTensorMagic.size(), kTensorMagic) != 0) throw FormatError("bad tensor magic", 0);
  auto words = expect(kTensorMagic);
  int version = 0;
  if (words.size() != 1 || !parse_number(words[0], version) || version != kTensorVersion) {
    throw FormatError("unsupported tensor version", start);
  }
  Tensor t;
  words = expect("tag");
  if (words.size() != 1 || words[0].empty()) throw FormatError("bad tensor tag", start);
  t.tag = std::string(words[0]);
  words = expect("dims");
  if (words.size() != 3 || !parse_number(words[0], t.channels) || !parse_number(words[1], t.height) ||
      !parse_number(words[2], t.width) || t.channels < 0 || t.height < 0 || t.width < 0) {
    throw FormatError("bad tensor dims", start);
  }
  words = expect("interval");
  if (words.size() != 2 || !parse_number(words[0], t.interval.begin) || !parse_number(words[1], t.interval.end)) {
    throw FormatError("bad tensor interval", start);
  }
  words = expect("data");
  if (!words.empty()) throw FormatError("bad tensor data marker", start);

  const std::size_t n = static_cast<std::size_t>(t.channels) * static_cast<std::size_t>(t.height) *
                        static_cast<std::size_t>(t.width);
  const std::size_t body = buf.size() - std::min(lines.pos, buf.size());
  if (lines.pos > buf.size() || body != 4 * n) {
    throw FormatError("tensor payload has " + std::to_string(body) + " bytes, expected " + std::to_string(4 * n),
                      std::min(lines.pos, buf.size()) + std::min(body, 4 * n));
  }
  t.data.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data()) + lines.pos;
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = get_le<std::uint32_t>(p + 4 * i);
    std::memcpy(&t.data[i], &bits, sizeof bits);
  }
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  auto f = open_out(path);
  write_tensor(f, t);
  finish(f, path);
}

Tensor load_tensor(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_tensor(f);
}

Tensor to_tensor(const Stack& s) {
  Tensor t{std::string(to_string(s.representation())), s.channels(), s.height(), s.width(), s.interval(), {}};
  t.data.reserve(s.values().size());
  for (double v : s.values()) t.data.push_back(static_cast<float>(v));
  return t;
}

Stack to_stack(const Tensor& t) {
  Representation rep{};
  try {
    rep = parse_representation(t.tag);
  } catch (const std::invalid_argument&) {
    throw FormatError("tensor tag '" + t.tag + "' is not a stack representation", 0);
  }
  Stack s(rep, t.width, t.height, t.channels, t.interval);
  std::copy(t.data.begin(), t.data.end(), s.values().begin());
  return s;
}

namespace {

void expect_single(const Tensor& t, std::string_view tag) {
  if (t.tag != tag || t.channels != 1) {
    throw FormatError("expected a one-channel '" + std::string(tag) + "' tensor, got '" + t.tag + "'", 0);
  }
}

}  // namespace

Tensor to_tensor(const DisparityMap& d) {
  Tensor t{"disparity", 1, d.height(), d.width(), {}, {}};
  t.data.reserve(static_cast<std::size_t>(d.width()) * static_cast<std::size_t>(d.height()));
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      t.data.push_back(d.valid(x, y) ? static_cast<float>(d.at(x, y)) : std::numeric_limits<float>::quiet_NaN());
    }
  }
  return t;
}

DisparityMap to_disparity(const Tensor& t) {
  expect_single(t, "disparity");
  DisparityMap d(t.width, t.height);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const float v = t.data[static_cast<std::size_t>(y) * t.width + x];
      if (!std::isnan(v)) d.set(x, y, v);
    }
  }
  return d;
}

Tensor to_tensor(const PixelMask& m) {
  Tensor t{"mask", 1, m.height, m.width, {}, {}};
  for (auto b : m.bits) t.data.push_back(b ? 1.0F : 0.0F);
  return t;
}

PixelMask to_mask(const Tensor& t) {
  expect_single(t, "mask");
  PixelMask m(t.width, t.height);
  for (std::size_t i = 0; i < t.data.size(); ++i) m.bits[i] = t.data[i] != 0.0F ? 1 : 0;
  return m;
}

Tensor to_tensor(const SparseDisparityGrid& g) {
  Tensor t{"hints", 1, g.height(), g.width(), {g.t_z(), g.t_z()}, {}};
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      t.data.push_back(g.valid(x, y) ? static_cast<float>(g.disparity(x, y))
                                     : std::numeric_limits<float>::quiet_NaN());
    }
  }
  return t;
}

SparseDisparityGrid to_grid(const Tensor& t) {
  expect_single(t, "hints");
  SparseDisparityGrid g(t.width, t.height, t.interval.begin);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const float v = t.data[static_cast<std::size_t>(y) * t.width + x];
      if (!std::isnan(v)) g.set(x, y, v);
    }
  }
  return g;
}

}  // namespace evfuse
