#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sifem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Open piecewise-linear crack curve. Coordinates in km.
///
/// Orientation is fixed by the vertex order: the reference normal at any
/// point is the left-hand normal of the local tangent direction, so the
/// "+" side of the curve lies to the left when walking from the first
/// vertex to the last.
class CrackCurve {
public:
  /// Builds a curve from an ordered vertex list. Throws ConfigError if
  /// fewer than 2 vertices are given or consecutive vertices coincide
  /// (segment length <= 1e-12 km).
  explicit CrackCurve(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  /// Cumulative arc length per vertex, starting at 0.
  const std::vector<double>& arc_lengths() const { return arc_; }
  double total_length() const { return arc_.back(); }
  std::size_t segment_count() const { return vertices_.size() - 1; }

  /// Unit tangent of segment k (from vertex k to k+1).
  Vec2 segment_tangent(std::size_t k) const;
  /// Left-hand unit normal of segment k.
  Vec2 segment_normal(std::size_t k) const;
  /// Unit normal at vertex k: segment normal for endpoints, renormalized
  /// average of the adjacent segment normals at interior vertices.
  Vec2 vertex_normal(std::size_t k) const;

private:
  std::vector<Vec2> vertices_;
  std::vector<double> arc_;
};

/// Result of a closest-point projection onto a CrackCurve.
struct Projection {
  Vec2 point;        ///< nearest point on the curve (km)
  double s = 0.0;    ///< arc-length parameter of the nearest point (km)
  Vec2 tangent;      ///< unit tangent, the left-rotate of the normal
  Vec2 normal;       ///< unit left-hand normal at the nearest point
  Vec2 gap;          ///< projected point minus query point (km)
  bool on_endpoint = false;  ///< true when the minimizer is a curve endpoint
};

/// Globally nearest point on the curve. Ties between equidistant segments
/// resolve to the smallest arc-length parameter.
Projection project_to_crack(const CrackCurve& curve, const Vec2& x);

/// Side classification of x relative to the curve: sign of
/// (x - projection).normal, with |value| < 1e-14 resolving to +1.
int side_of(const CrackCurve& curve, const Vec2& x);

// ---- generators --------------------------------------------------------

/// Straight segment of given center, length and inclination angle (rad).
CrackCurve make_segment(const Vec2& center, double length, double angle);

/// Circular arc sampled as a polyline: n_seg equal segments spanning
/// `span_rad` radians starting at `start_rad` (angles from the +x axis,
/// counterclockwise about `center`).
CrackCurve make_arc_polyline(const Vec2& center, double radius,
                             double start_rad, double span_rad, int n_seg);

/// Sine curve y = A sin(2 pi (x - xc) / L) over x in [xc - L/2, xc + L/2],
/// sampled with n_seg segments at uniform parameter spacing.
CrackCurve make_sine_curve(const Vec2& center, double extent, double amplitude,
                           int n_seg);

/// Parabolic arc with apex at (xc, yc + height) and endpoints at
/// (xc +- half_width, yc), sampled with n_seg segments.
CrackCurve make_parabola_polyline(const Vec2& center, double half_width,
                                  double height, int n_seg);

}  // namespace sifem
