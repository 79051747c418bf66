#include "sifem/geometry.hpp"

#include <cmath>
#include <limits>

#include "sifem/errors.hpp"

namespace sifem {

namespace {
constexpr double kMinSegmentLength = 1e-12;
constexpr double kSideTie = 1e-14;
}  // namespace

CrackCurve::CrackCurve(std::vector<Vec2> vertices)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) {
    throw ConfigError("crack curve needs at least 2 vertices");
  }
  arc_.resize(vertices_.size());
  arc_[0] = 0.0;
  for (std::size_t k = 1; k < vertices_.size(); ++k) {
    const double len = (vertices_[k] - vertices_[k - 1]).norm();
    if (len <= kMinSegmentLength) {
      throw ConfigError("crack curve has a degenerate segment (length <= 1e-12 km)");
    }
    arc_[k] = arc_[k - 1] + len;
  }
}

Vec2 CrackCurve::segment_tangent(std::size_t k) const {
  return (vertices_[k + 1] - vertices_[k]).normalized();
}

Vec2 CrackCurve::segment_normal(std::size_t k) const {
  const Vec2 t = segment_tangent(k);
  return Vec2(-t.y(), t.x());
}

Vec2 CrackCurve::vertex_normal(std::size_t k) const {
  if (k == 0) return segment_normal(0);
  if (k + 1 == vertices_.size()) return segment_normal(segment_count() - 1);
  const Vec2 avg = segment_normal(k - 1) + segment_normal(k);
  const double norm = avg.norm();
  if (norm < kMinSegmentLength) {
    // Opposite adjacent normals (curve doubles back); fall back to one side.
    return segment_normal(k);
  }
  return avg / norm;
}

Projection project_to_crack(const CrackCurve& curve, const Vec2& x) {
  const auto& v = curve.vertices();
  const auto& arc = curve.arc_lengths();

  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_seg = 0;
  double best_t = 0.0;  // local parameter in [0, 1] along the winning segment
  double best_s = 0.0;

  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const Vec2 d = v[k + 1] - v[k];
    const double len2 = d.squaredNorm();
    double t = (x - v[k]).dot(d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 p = v[k] + t * d;
    const double d2 = (p - x).squaredNorm();
    const double s = arc[k] + t * std::sqrt(len2);
    // Strict inequality keeps the smallest arc-length parameter on ties.
    if (d2 < best_d2) {
      best_d2 = d2;
      best_seg = k;
      best_t = t;
      best_s = s;
    }
  }

  Projection proj;
  proj.point = v[best_seg] + best_t * (v[best_seg + 1] - v[best_seg]);
  proj.s = best_s;
  proj.gap = proj.point - x;
  proj.on_endpoint =
      (best_seg == 0 && best_t == 0.0) ||
      (best_seg == curve.segment_count() - 1 && best_t == 1.0);

  // Interior polyline vertices use the averaged normal so that the normal
  // field is continuous along kinked cracks.
  if (best_t == 0.0) {
    proj.normal = curve.vertex_normal(best_seg);
  } else if (best_t == 1.0) {
    proj.normal = curve.vertex_normal(best_seg + 1);
  } else {
    proj.normal = curve.segment_normal(best_seg);
  }
  proj.tangent = Vec2(-proj.normal.y(), proj.normal.x());
  return proj;
}

int side_of(const CrackCurve& curve, const Vec2& x) {
  const Projection proj = project_to_crack(curve, x);
  const double sgn = (x - proj.point).dot(proj.normal);
  if (std::abs(sgn) < kSideTie) return +1;
  return sgn > 0.0 ? +1 : -1;
}

CrackCurve make_segment(const Vec2& center, double length, double angle) {
  if (length <= 0.0) throw ConfigError("segment length must be positive");
  const Vec2 dir(std::cos(angle), std::sin(angle));
  return CrackCurve({center - 0.5 * length * dir, center + 0.5 * length * dir});
}

CrackCurve make_arc_polyline(const Vec2& center, double radius,
                             double start_rad, double span_rad, int n_seg) {
  if (radius <= 0.0) throw ConfigError("arc radius must be positive");
  if (n_seg < 1) throw ConfigError("arc needs at least one segment");
  std::vector<Vec2> pts;
  pts.reserve(n_seg + 1);
  for (int k = 0; k <= n_seg; ++k) {
    const double a = start_rad + span_rad * static_cast<double>(k) / n_seg;
    pts.emplace_back(center.x() + radius * std::cos(a),
                     center.y() + radius * std::sin(a));
  }
  return CrackCurve(std::move(pts));
}

CrackCurve make_sine_curve(const Vec2& center, double extent, double amplitude,
                           int n_seg) {
  if (extent <= 0.0) throw ConfigError("sine curve extent must be positive");
  if (n_seg < 1) throw ConfigError("sine curve needs at least one segment");
  std::vector<Vec2> pts;
  pts.reserve(n_seg + 1);
  for (int k = 0; k <= n_seg; ++k) {
    const double t = static_cast<double>(k) / n_seg - 0.5;  // [-1/2, 1/2]
    const double x = center.x() + extent * t;
    const double y = center.y() + amplitude * std::sin(2.0 * M_PI * t);
    pts.emplace_back(x, y);
  }
  return CrackCurve(std::move(pts));
}

CrackCurve make_parabola_polyline(const Vec2& center, double half_width,
                                  double height, int n_seg) {
  if (half_width <= 0.0) throw ConfigError("parabola half-width must be positive");
  if (n_seg < 1) throw ConfigError("parabola needs at least one segment");
  std::vector<Vec2> pts;
  pts.reserve(n_seg + 1);
  for (int k = 0; k <= n_seg; ++k) {
    const double t = 2.0 * static_cast<double>(k) / n_seg - 1.0;  // [-1, 1]
    const double x = center.x() + half_width * t;
    const double y = center.y() + height * (1.0 - t * t);
    pts.emplace_back(x, y);
  }
  return CrackCurve(std::move(pts));
}

}  // namespace sifem
