#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sifem/geometry.hpp"

namespace sifem {

struct Box {
  Vec2 lo{-0.5, -0.5};
  Vec2 hi{0.5, 0.5};
  double width() const { return hi.x() - lo.x(); }
  double height() const { return hi.y() - lo.y(); }
};

struct Facet {
  std::array<int, 2> nodes{-1, -1};
  std::array<int, 2> owners{-1, -1};  // owners[1] == -1 on the boundary
  bool boundary = false;
};

/// Uniform structured quadrilateral grid with row-major node ordering and
/// counterclockwise element connectivity.
class StructuredQuadMesh {
public:
  StructuredQuadMesh(int n, const Box& domain);

  int n() const { return n_; }
  const Box& domain() const { return domain_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 4>>& quads() const { return quads_; }
  const std::vector<Facet>& facets() const { return facets_; }

  Vec2 centroid(int element) const;

private:
  int n_;
  Box domain_;
  double hx_, hy_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 4>> quads_;
  std::vector<Facet> facets_;
};

StructuredQuadMesh build_grid(int n, const Box& domain = Box{});

/// One mesh facet on the surrogate path. Node order follows the path walk;
/// `normal` is the facet unit normal oriented from the minus-side owner to
/// the plus-side owner.
struct SurrogateFacet {
  std::array<int, 2> nodes{-1, -1};
  int elem_plus = -1;
  int elem_minus = -1;
  Vec2 normal;
  std::array<bool, 2> tip{false, false};
};

/// Mesh-aligned staircase standing in for one crack: an ordered, connected
/// facet path plus the element side classification used to build it.
struct SurrogateInterface {
  std::vector<SurrogateFacet> facets;
  std::vector<int> path_nodes;  // facet k spans (path_nodes[k], path_nodes[k+1])
  std::array<bool, 2> reaches_boundary{false, false};
  std::vector<std::int8_t> element_side;  // per element: +1 / -1
};

SurrogateInterface select_surrogate(const StructuredQuadMesh& mesh,
                                    const CrackCurve& curve);

/// CSV dump of the element classification and the surrogate path
/// (element id, side, then the facet node pairs).
void dump_classification(const StructuredQuadMesh& mesh,
                         const SurrogateInterface& surrogate, std::ostream& os);

/// Split-mesh record of one crack: facet node quadruples and the ordered
/// path-node pairs after duplication. An unsplit tip has plus == minus.
struct CrackTopology {
  struct FacetRecord {
    int elem_plus = -1;
    int elem_minus = -1;
    std::array<int, 2> plus_nodes{-1, -1};
    std::array<int, 2> minus_nodes{-1, -1};
    Vec2 normal;
  };
  std::vector<FacetRecord> facets;
  std::vector<int> path_plus;
  std::vector<int> path_minus;
  std::vector<Vec2> path_coords;
  std::array<bool, 2> reaches_boundary{false, false};
};

/// Structured mesh whose connectivity has been duplicated along the
/// surrogate path of each crack. Node positions are unchanged; elements on
/// opposite sides of a surrogate facet no longer share facet nodes.
class SplitMesh {
public:
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<std::array<int, 4>>& quads() const { return quads_; }
  const std::vector<CrackTopology>& cracks() const { return cracks_; }
  const Box& domain() const { return domain_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  int base_node_count() const { return base_node_count_; }

  /// original node id -> (plus id, minus id) for every duplicated node
  const std::vector<std::array<int, 3>>& duplicated_nodes() const {
    return dup_map_;
  }

  int path_node_count() const;
  /// Offset of crack c's path nodes in the global path-node list.
  int path_node_offset(int crack) const;

  /// Reference coordinates (xi, eta) of physical point x inside element e.
  Vec2 reference_coords(int element, const Vec2& x) const;
  Vec2 element_origin(int element) const { return nodes_[quads_[element][0]]; }

  friend SplitMesh split_along(const StructuredQuadMesh& mesh,
                               const std::vector<SurrogateInterface>& surrogates);

private:
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 4>> quads_;
  std::vector<CrackTopology> cracks_;
  std::vector<std::array<int, 3>> dup_map_;  // {orig, plus, minus}
  Box domain_;
  double hx_ = 0, hy_ = 0;
  int base_node_count_ = 0;
  std::vector<int> path_offsets_;
};

SplitMesh split_along(const StructuredQuadMesh& mesh,
                      const std::vector<SurrogateInterface>& surrogates);

/// Geometric transfer payload at one point of the surrogate path.
struct ShiftSample {
  Vec2 pos;       ///< evaluation point on the surrogate (km)
  Vec2 gap;       ///< closest-point projection minus pos (km)
  Vec2 normal;    ///< true-crack unit normal at the projection
  Vec2 tangent;   ///< true-crack unit tangent at the projection
  double cos_phi = 1.0;  ///< surrogate normal . true normal
  Vec2 n_perp;    ///< tangential mismatch of the surrogate normal
  double s = 0.0; ///< arc-length of the projection on the true crack (km)
  bool flagged = false;  ///< cos_phi <= 0 (facet nearly tangent to the crack)
};

/// Per-facet shift geometry for one crack: samples at the facet quadrature
/// points and at the facet endpoints, plus per-path-node samples.
struct ShiftData {
  struct FacetShift {
    std::vector<ShiftSample> quad;     // one per facet quadrature point
    std::array<ShiftSample, 2> node;   // at the facet endpoints
    double length = 0.0;
  };
  std::vector<FacetShift> facets;
  std::vector<ShiftSample> path_nodes;
  double crack_length = 0.0;
  bool any_flagged = false;
};

ShiftData shift_data(const SplitMesh& mesh, int crack_index,
                     const CrackCurve& curve, int n_gauss = 2);

}  // namespace sifem
