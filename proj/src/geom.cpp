#include "ar3n/geom.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace ar3n {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kExtent = 0.8;

constexpr std::array<Shape, 4> kTraining{Shape::circle, Shape::square, Shape::triangle,
                                         Shape::sine_wave};
constexpr std::array<Shape, 4> kTesting{Shape::star, Shape::spiral, Shape::figure_eight,
                                        Shape::rounded_rect};

constexpr std::array<std::pair<Shape, std::string_view>, 8> kNames{{
    {Shape::circle, "circle"},
    {Shape::square, "square"},
    {Shape::triangle, "triangle"},
    {Shape::sine_wave, "sine_wave"},
    {Shape::star, "star"},
    {Shape::spiral, "spiral"},
    {Shape::figure_eight, "figure_eight"},
    {Shape::rounded_rect, "rounded_rect"},
}};

std::vector<Point2> resample_polygon(const std::vector<Point2>& corners, int spu) {
  std::vector<Point2> out{corners.front()};
  for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
    const Point2 a = corners[i];
    const Point2 b = corners[i + 1];
    const double len = (b - a).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(len * spu)));
    for (int k = 1; k < pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.push_back(a + (b - a) * t);
    }
    out.push_back(b);
  }
  return out;
}

// Resamples a parametric curve f(t), t in [0,1], at uniform arc length. A dense
// table maps arc length back to t, and each vertex is evaluated on the exact
// curve.
std::vector<Point2> resample_curve(const std::function<Point2(double)>& f, bool closed,
                                   int spu) {
  constexpr int kDense = 40000;
  std::vector<double> ts(kDense + 1);
  std::vector<double> ss(kDense + 1);
  Point2 prev = f(0.0);
  ss[0] = 0.0;
  for (int i = 1; i <= kDense; ++i) {
    ts[i] = static_cast<double>(i) / kDense;
    const Point2 cur = f(ts[i]);
    ss[i] = ss[i - 1] + (cur - prev).norm();
    prev = cur;
  }
  const double total = ss.back();
  const int n = std::max(1, static_cast<int>(std::ceil(total * spu)));
  std::vector<Point2> out;
  out.reserve(n + 1);
  out.push_back(f(0.0));
  std::size_t j = 1;
  for (int k = 1; k < n; ++k) {
    const double target = total * k / n;
    while (j < ss.size() - 1 && ss[j] < target) ++j;
    const double frac = (target - ss[j - 1]) / (ss[j] - ss[j - 1]);
    out.push_back(f(ts[j - 1] + frac * (ts[j] - ts[j - 1])));
  }
  out.push_back(closed ? out.front() : f(1.0));
  return out;
}

Point2 rounded_rect_at(double t) {
  constexpr double hw = kExtent;  // half width
  constexpr double hh = 0.5;      // half height
  constexpr double r = 0.2;
  constexpr double sx = 2 * (hw - r);
  constexpr double sy = 2 * (hh - r);
  constexpr double arc = kPi * r / 2;
  constexpr double total = 2 * sx + 2 * sy + 4 * arc;
  double s = std::clamp(t, 0.0, 1.0) * total;
  // Starts at the middle of the bottom edge, counter-clockwise.
  struct Piece {
    bool straight;
    Point2 origin;  // start for lines, center for arcs
    Vec2 dir;       // direction for lines
    double angle0;  // start angle for arcs
    double len;
  };
  const std::array<Piece, 9> pieces{{
      {true, {0.0, -hh}, {1, 0}, 0, sx / 2},
      {false, {hw - r, -hh + r}, {}, -kPi / 2, arc},
      {true, {hw, -hh + r}, {0, 1}, 0, sy},
      {false, {hw - r, hh - r}, {}, 0, arc},
      {true, {hw - r, hh}, {-1, 0}, 0, sx},
      {false, {-hw + r, hh - r}, {}, kPi / 2, arc},
      {true, {-hw, hh - r}, {0, -1}, 0, sy},
      {false, {-hw + r, -hh + r}, {}, kPi, arc},
      {true, {-hw + r, -hh}, {1, 0}, 0, sx / 2},
  }};
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    if (s <= p.len || i + 1 == pieces.size()) {
      s = std::min(s, p.len);
      if (p.straight) return p.origin + p.dir * s;
      const double a = p.angle0 + s / r;
      return p.origin + Vec2{std::cos(a), std::sin(a)} * r;
    }
    s -= p.len;
  }
  return pieces.front().origin;
}

std::vector<Point2> shape_points(Shape shape, int spu) {
  switch (shape) {
    case Shape::circle:
      return resample_curve(
          [](double t) {
            const double a = 2 * kPi * t;
            return Point2{kExtent * std::cos(a), kExtent * std::sin(a)};
          },
          true, spu);
    case Shape::square:
      return resample_polygon({{-kExtent, -kExtent},
                               {kExtent, -kExtent},
                               {kExtent, kExtent},
                               {-kExtent, kExtent},
                               {-kExtent, -kExtent}},
                              spu);
    case Shape::triangle: {
      std::vector<Point2> c;
      for (int k = 0; k <= 3; ++k) {
        const double a = kPi / 2 + 2 * kPi * k / 3;
        c.push_back({kExtent * std::cos(a), kExtent * std::sin(a)});
      }
      c.back() = c.front();
      return resample_polygon(c, spu);
    }
    case Shape::sine_wave:
      return resample_curve(
          [](double t) {
            const double x = -kExtent + 2 * kExtent * t;
            return Point2{x, 0.4 * std::sin(2 * kPi * t)};
          },
          false, spu);
    case Shape::star: {
      std::vector<Point2> c;
      for (int k = 0; k <= 10; ++k) {
        const double a = kPi / 2 + kPi * k / 5;
        const double r = (k % 2 == 0) ? kExtent : 0.32;
        c.push_back({r * std::cos(a), r * std::sin(a)});
      }
      c.back() = c.front();
      return resample_polygon(c, spu);
    }
    case Shape::spiral:
      return resample_curve(
          [](double t) {
            const double a = 4 * kPi * t;
            const double r = 0.12 + (kExtent - 0.12) * t;
            return Point2{r * std::cos(a), r * std::sin(a)};
          },
          false, spu);
    case Shape::figure_eight:
      return resample_curve(
          [](double t) {
            const double a = 2 * kPi * t;
            return Point2{kExtent * std::sin(a), 0.5 * std::sin(2 * a)};
          },
          true, spu);
    case Shape::rounded_rect:
      return resample_curve(rounded_rect_at, true, spu);
  }
  throw Error("unknown shape");
}

// Closest point on segment i with the segment parameter limited to [t_lo, t_hi].
struct Candidate {
  Point2 q;
  double d2;
  double t;
};

Candidate closest_on_segment(const Trajectory& traj, std::size_t i, Point2 p, double t_lo,
                             double t_hi) {
  const Point2 a = traj.points()[i];
  const Point2 b = traj.points()[i + 1];
  const Vec2 d = b - a;
  double t = std::clamp((p - a).dot(d) / d.dot(d), t_lo, t_hi);
  Point2 q = (t >= 1.0) ? b : a + d * t;
  if (t <= 0.0) q = a;
  const Vec2 r = p - q;
  return {q, r.dot(r), t};
}

Projection make_projection(const Trajectory& traj, std::size_t i, Point2 p, Point2 q,
                           double t) {
  const Point2 a = traj.points()[i];
  const Point2 b = traj.points()[i + 1];
  const Vec2 d = b - a;
  const double len = traj.cum_len()[i + 1] - traj.cum_len()[i];
  Projection out;
  out.x_d = q;
  out.e = (p - q).norm();
  out.s = traj.cum_len()[i] + t * len;
  out.tangent = d * (1.0 / d.norm());
  out.normal = out.tangent.perp();
  out.segment = i;
  return out;
}

// Relative slack under which a later candidate does not displace an earlier one.
constexpr double kTieEps = 1e-12;

}  // namespace

std::string_view to_string(Shape s) {
  for (const auto& [shape, name] : kNames)
    if (shape == s) return name;
  return "unknown";
}

Shape parse_shape(std::string_view name) {
  for (const auto& [shape, n] : kNames)
    if (n == name) return shape;
  throw Error("unknown shape id: " + std::string(name));
}

std::span<const Shape> training_shapes() { return kTraining; }
std::span<const Shape> testing_shapes() { return kTesting; }

Trajectory::Trajectory(std::string id, std::vector<Point2> points)
    : id_(std::move(id)), points_(std::move(points)) {
  if (points_.size() < 2) throw Error("trajectory needs at least two points");
  cum_len_.reserve(points_.size());
  cum_len_.push_back(0.0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].finite()) throw Error("trajectory point is not finite");
    if (i == 0) continue;
    const double seg = (points_[i] - points_[i - 1]).norm();
    if (!(seg > 1e-9)) throw Error("trajectory has coincident consecutive points");
    max_seg_ = std::max(max_seg_, seg);
    cum_len_.push_back(cum_len_.back() + seg);
  }
}

Trajectory build_trajectory(Shape shape, int samples_per_unit) {
  if (samples_per_unit < 1) throw Error("samples_per_unit must be positive");
  return Trajectory(std::string(to_string(shape)), shape_points(shape, samples_per_unit));
}

Projection project(const Trajectory& traj, Point2 p) {
  return project_window(traj, p, 0.0, traj.length());
}

Projection project_window(const Trajectory& traj, Point2 p, double s_lo, double s_hi,
                          VertexTie tie) {
  const auto& cum = traj.cum_len();
  s_lo = std::clamp(s_lo, 0.0, traj.length());
  s_hi = std::clamp(s_hi, s_lo, traj.length());
  // First segment whose end reaches s_lo.
  auto it = std::lower_bound(cum.begin() + 1, cum.end(), s_lo);
  std::size_t i = static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1;

  bool have = false;
  Candidate best{};
  std::size_t best_i = i;
  for (; i < traj.segment_count() && cum[i] <= s_hi; ++i) {
    const double len = cum[i + 1] - cum[i];
    const double t_lo = std::max(0.0, (s_lo - cum[i]) / len);
    const double t_hi = std::min(1.0, (s_hi - cum[i]) / len);
    const Candidate c = closest_on_segment(traj, i, p, t_lo, t_hi);
    if (!have || c.d2 < best.d2 * (1.0 - kTieEps) - 1e-300) {
      best = c;
      best_i = i;
      have = true;
    }
  }
  if (tie == VertexTie::later && best.t >= 1.0 && best_i + 1 < traj.segment_count() &&
      cum[best_i + 1] < s_hi) {
    return make_projection(traj, best_i + 1, p, traj.points()[best_i + 1], 0.0);
  }
  return make_projection(traj, best_i, p, best.q, best.t);
}

PointAt point_at(const Trajectory& traj, double s) {
  PointAt out;
  const double L = traj.length();
  if (s < 0.0 || s > L || std::isnan(s)) {
    out.clamped = true;
    s = std::isnan(s) ? 0.0 : std::clamp(s, 0.0, L);
  }
  const auto& cum = traj.cum_len();
  if (s >= L) {
    out.point = traj.points().back();
    return out;
  }
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1;
  const double t = (s - cum[i]) / (cum[i + 1] - cum[i]);
  const Point2 a = traj.points()[i];
  const Point2 b = traj.points()[i + 1];
  out.point = (t <= 0.0) ? a : a + (b - a) * t;
  return out;
}

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  const auto old = os.precision(17);
  os << "# " << traj.id() << ',' << traj.length() << '\n';
  for (const Point2& p : traj.points()) os << p.x << ',' << p.y << '\n';
  os.precision(old);
}

Trajectory read_trajectory(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
    throw Error("trajectory table: missing header row");
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw Error("trajectory table: malformed header");
  std::string id = line.substr(2, comma - 2);
  std::vector<Point2> pts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Point2 p;
    char sep = 0;
    if (!(row >> p.x >> sep >> p.y) || sep != ',')
      throw Error("trajectory table: malformed row '" + line + "'");
    pts.push_back(p);
  }
  return Trajectory(std::move(id), std::move(pts));
}

}  // namespace ar3n
