#pragma once

// Planar windows, point patterns and base-station record ingestion. All
// coordinates are in kilometres; windows are closed boxes, so boundary points
// belong to the window.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spatnet/rng.hpp"

namespace spatnet {

inline constexpr double earth_radius_km = 6371.0;
inline constexpr double pi = 3.14159265358979323846;

enum class Mark { macro, micro };

inline std::string_view mark_name(Mark m) {
  return m == Mark::macro ? "macro" : "micro";
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double distance(Point a, Point b) {
  return std::sqrt(squared_distance(a, b));
}

class Window {
 public:
  Window(double x_min, double y_min, double x_max, double y_max)
      : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
    if (!std::isfinite(x_min) || !std::isfinite(y_min) ||
        !std::isfinite(x_max) || !std::isfinite(y_max))
      throw std::invalid_argument("Window: coordinates must be finite");
    if (!(x_max > x_min) || !(y_max > y_min))
      throw std::invalid_argument("Window: max must exceed min on both axes");
  }

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }

  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  double shorter_side() const { return std::min(width(), height()); }

  bool contains(Point p) const {
    return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_;
  }

  Window dilate(double d) const {
    if (d < 0.0) throw std::invalid_argument("Window::dilate: d must be >= 0");
    return Window(x_min_ - d, y_min_ - d, x_max_ + d, y_max_ + d);
  }

  // Intersection with positive area, or nullopt.
  static std::optional<Window> intersect(const Window& a, const Window& b) {
    const double x0 = std::max(a.x_min_, b.x_min_);
    const double y0 = std::max(a.y_min_, b.y_min_);
    const double x1 = std::min(a.x_max_, b.x_max_);
    const double y1 = std::min(a.y_max_, b.y_max_);
    if (x1 > x0 && y1 > y0) return Window(x0, y0, x1, y1);
    return std::nullopt;
  }

  friend bool operator==(const Window& a, const Window& b) {
    return a.x_min_ == b.x_min_ && a.y_min_ == b.y_min_ &&
           a.x_max_ == b.x_max_ && a.y_max_ == b.y_max_;
  }

 private:
  double x_min_, y_min_, x_max_, y_max_;
};

class PointPattern {
 public:
  explicit PointPattern(Window window, std::vector<Point> points = {},
                        std::optional<std::vector<Mark>> marks = std::nullopt)
      : window_(window), points_(std::move(points)), marks_(std::move(marks)) {
    for (const Point& p : points_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw std::invalid_argument("PointPattern: coordinates must be finite");
      if (!window_.contains(p))
        throw std::invalid_argument("PointPattern: point outside window");
    }
    if (marks_ && marks_->size() != points_.size())
      throw std::invalid_argument("PointPattern: marks length != points length");
  }

  const Window& window() const { return window_; }
  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  bool has_marks() const { return marks_.has_value(); }
  const std::vector<Mark>& marks() const {
    if (!marks_) throw std::logic_error("PointPattern: no marks present");
    return *marks_;
  }

  PointPattern subset(Mark keep) const {
    if (!marks_) throw std::logic_error("PointPattern: no marks present");
    std::vector<Point> pts;
    std::vector<Mark> mks;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if ((*marks_)[i] == keep) {
        pts.push_back(points_[i]);
        mks.push_back(keep);
      }
    }
    return PointPattern(window_, std::move(pts), std::move(mks));
  }

 private:
  Window window_;
  std::vector<Point> points_;
  std::optional<std::vector<Mark>> marks_;
};

struct BsRecord {
  std::string id;
  double lon = 0.0;  // degrees
  double lat = 0.0;  // degrees
  Mark kind = Mark::macro;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double(std::string_view s, std::size_t line_no,
                           std::string_view what) {
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": malformed " + std::string(what) + " '" +
                             std::string(s) + "'");
  return value;
}

}  // namespace detail

inline Mark parse_mark(std::string_view s) {
  const std::string k = detail::lower(detail::trim(s));
  if (k == "macro") return Mark::macro;
  if (k == "micro") return Mark::micro;
  throw std::runtime_error("unknown kind '" + std::string(s) + "'");
}

// Reads `id,lon,lat,kind` records. Errors carry 1-based line numbers.
inline std::vector<BsRecord> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty file, expected header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto header = detail::split_fields(line);
    if (header.size() != 4 || detail::lower(header[0]) != "id" ||
        detail::lower(header[1]) != "lon" || detail::lower(header[2]) != "lat" ||
        detail::lower(header[3]) != "kind")
      throw std::runtime_error(path.string() +
                               ": expected header 'id,lon,lat,kind'");
  }

  std::vector<BsRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    BsRecord rec;
    rec.id = std::string(fields[0]);
    rec.lon = detail::parse_double(fields[1], line_no, "longitude");
    rec.lat = detail::parse_double(fields[2], line_no, "latitude");
    if (rec.lat < -90.0 || rec.lat > 90.0)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": latitude out of range");
    if (rec.lon < -180.0 || rec.lon > 180.0)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": longitude out of range");
    try {
      rec.kind = parse_mark(fields[3]);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// Equirectangular projection onto a km plane, origin at the minimum lon/lat
// of the records. Distortion stays below 1% for extents up to ~200 km at
// mid-latitudes, which covers every window this library targets.
inline PointPattern project(std::span<const BsRecord> records,
                            double ref_lat_deg) {
  if (records.empty())
    throw std::invalid_argument("project: no records");

  const double deg = pi / 180.0;
  double lon_min = records[0].lon, lat_min = records[0].lat;
  for (const auto& r : records) {
    lon_min = std::min(lon_min, r.lon);
    lat_min = std::min(lat_min, r.lat);
  }
  const double x_scale = earth_radius_km * std::cos(ref_lat_deg * deg) * deg;
  const double y_scale = earth_radius_km * deg;

  std::vector<Point> pts;
  std::vector<Mark> mks;
  pts.reserve(records.size());
  mks.reserve(records.size());
  double x_max = 0.0, y_max = 0.0;
  for (const auto& r : records) {
    Point p{(r.lon - lon_min) * x_scale, (r.lat - lat_min) * y_scale};
    x_max = std::max(x_max, p.x);
    y_max = std::max(y_max, p.y);
    pts.push_back(p);
    mks.push_back(r.kind);
  }
  // Bounding box; degenerate sides get a hair of width so the window stays
  // a valid box.
  const double eps = 1e-9;
  Window w(0.0, 0.0, std::max(x_max, eps), std::max(y_max, eps));
  return PointPattern(w, std::move(pts), std::move(mks));
}

inline PointPattern project(std::span<const BsRecord> records) {
  if (records.empty())
    throw std::invalid_argument("project: no records");
  double lat_sum = 0.0;
  for (const auto& r : records) lat_sum += r.lat;
  return project(records, lat_sum / static_cast<double>(records.size()));
}

// `count` axis-aligned sub-windows of the given size with lower-left corners
// uniform over the admissible rectangle. Region i draws from its own derived
// stream, so the list is identical however the loop is scheduled.
inline std::vector<Window> sample_regions(const Window& parent, double width,
                                          double height, std::size_t count,
                                          std::uint64_t seed) {
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("sample_regions: size must be positive");
  if (width > parent.width() || height > parent.height())
    throw std::invalid_argument("sample_regions: size larger than parent");

  const double x_slack = parent.width() - width;
  const double y_slack = parent.height() - height;
  std::vector<Window> regions;
  regions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::derived(seed, "region", i);
    const double x0 = parent.x_min() + x_slack * rng.uniform();
    const double y0 = parent.y_min() + y_slack * rng.uniform();
    regions.emplace_back(x0, y0, x0 + width, y0 + height);
  }
  return regions;
}

// Restriction of a pattern to `sub`; inclusive on all edges. The returned
// window is `sub` itself.
inline PointPattern clip(const PointPattern& pattern, const Window& sub) {
  if (!Window::intersect(pattern.window(), sub))
    throw std::invalid_argument("clip: windows are disjoint");
  std::vector<Point> pts;
  std::vector<Mark> mks;
  const bool marked = pattern.has_marks();
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const Point& p = pattern.points()[i];
    if (sub.contains(p)) {
      pts.push_back(p);
      if (marked) mks.push_back(pattern.marks()[i]);
    }
  }
  if (marked)
    return PointPattern(sub, std::move(pts), std::move(mks));
  return PointPattern(sub, std::move(pts));
}

// Mean over points of the distance to the nearest other point.
inline double nn_mean_distance(const PointPattern& pattern) {
  const auto& pts = pattern.points();
  const std::size_t n = pts.size();
  if (n < 2)
    throw std::invalid_argument(
        "nn_mean_distance: undefined for fewer than two points");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, squared_distance(pts[i], pts[j]));
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(n);
}

// Smallest interpoint distance; requires n >= 2.
inline double min_interpoint_distance(const PointPattern& pattern) {
  const auto& pts = pattern.points();
  const std::size_t n = pts.size();
  if (n < 2)
    throw std::invalid_argument(
        "min_interpoint_distance: undefined for fewer than two points");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::min(best, squared_distance(pts[i], pts[j]));
  return std::sqrt(best);
}

}  // namespace spatnet
