#pragma once

#include <cmath>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ar3n {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 2D vector in workspace units. The workspace is the square [-1,1]^2.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
  /// Counter-clockwise rotation by 90 degrees.
  constexpr Vec2 perp() const { return {-y, x}; }
};

constexpr Vec2 operator*(double k, Vec2 v) { return v * k; }

using Point2 = Vec2;

enum class Shape {
  // training set
  circle,
  square,
  triangle,
  sine_wave,
  // testing set
  star,
  spiral,
  figure_eight,
  rounded_rect,
};

std::string_view to_string(Shape s);
/// Throws ar3n::Error for unknown names.
Shape parse_shape(std::string_view name);

std::span<const Shape> training_shapes();
std::span<const Shape> testing_shapes();

class Trajectory {
 public:
  /// Validates the polyline: >= 2 points, finite, no segment shorter than 1e-9.
  Trajectory(std::string id, std::vector<Point2> points);

  const std::string& id() const { return id_; }
  const std::vector<Point2>& points() const { return points_; }
  const std::vector<double>& cum_len() const { return cum_len_; }
  double length() const { return cum_len_.back(); }
  std::size_t segment_count() const { return points_.size() - 1; }
  double max_segment_length() const { return max_seg_; }

 private:
  std::string id_;
  std::vector<Point2> points_;
  std::vector<double> cum_len_;
  double max_seg_ = 0.0;
};

struct Projection {
  Point2 x_d;
  double e = 0.0;  // |p - x_d|
  double s = 0.0;  // arc length of x_d
  Vec2 tangent{1.0, 0.0};
  Vec2 normal{0.0, 1.0};  // tangent rotated +90 degrees
  std::size_t segment = 0;
};

struct PointAt {
  Point2 point;
  bool clamped = false;
};

/// Parametric shape fitted in [-0.8, 0.8]^2 and resampled to near-uniform
/// segments of length about 1/samples_per_unit. Polygon corners are kept.
Trajectory build_trajectory(Shape shape, int samples_per_unit = 100);

/// Globally closest point on the polyline. Ties go to the smaller arc length.
Projection project(const Trajectory& traj, Point2 p);

enum class VertexTie {
  earlier,  // frame of the segment ending at the vertex
  later,    // frame of the segment starting at the vertex
};

/// Closest point restricted to arc lengths in [s_lo, s_hi]. Used to track
/// progress along paths whose distant sections may come closer than the
/// section currently being traced. x_d and s do not depend on `tie`; only the
/// tangent/normal frame reported for an exact vertex hit does.
Projection project_window(const Trajectory& traj, Point2 p, double s_lo, double s_hi,
                          VertexTie tie = VertexTie::earlier);

PointAt point_at(const Trajectory& traj, double s);

/// Plain-text table: header "# <id>,<length>", then one "x,y" per line.
void write_trajectory(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory(std::istream& is);

}  // namespace ar3n
