#include "sifem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "sifem/errors.hpp"
#include "sifem/fem.hpp"

namespace sifem {

StructuredQuadMesh::StructuredQuadMesh(int n, const Box& domain)
    : n_(n), domain_(domain) {
  if (n < 2) throw ConfigError("grid needs at least 2 elements per side");
  hx_ = domain.width() / n;
  hy_ = domain.height() / n;
  if (hx_ <= 0.0 || hy_ <= 0.0) throw ConfigError("domain box is degenerate");

  const int nn = n + 1;
  nodes_.reserve(static_cast<std::size_t>(nn) * nn);
  for (int iy = 0; iy < nn; ++iy) {
    for (int ix = 0; ix < nn; ++ix) {
      nodes_.emplace_back(domain.lo.x() + ix * hx_, domain.lo.y() + iy * hy_);
    }
  }

  quads_.reserve(static_cast<std::size_t>(n) * n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int v0 = iy * nn + ix;
      quads_.push_back({v0, v0 + 1, v0 + nn + 1, v0 + nn});
    }
  }

  auto elem_id = [&](int ix, int iy) { return iy * n + ix; };
  // Horizontal facets (normal +-y): between element rows.
  for (int iy = 0; iy <= n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      Facet f;
      f.nodes = {iy * nn + ix, iy * nn + ix + 1};
      const int below = (iy > 0) ? elem_id(ix, iy - 1) : -1;
      const int above = (iy < n) ? elem_id(ix, iy) : -1;
      f.owners = {below >= 0 ? below : above, below >= 0 ? above : -1};
      f.boundary = (below < 0 || above < 0);
      facets_.push_back(f);
    }
  }
  // Vertical facets (normal +-x): between element columns.
  for (int ix = 0; ix <= n; ++ix) {
    for (int iy = 0; iy < n; ++iy) {
      Facet f;
      f.nodes = {iy * nn + ix, (iy + 1) * nn + ix};
      const int left = (ix > 0) ? elem_id(ix - 1, iy) : -1;
      const int right = (ix < n) ? elem_id(ix, iy) : -1;
      f.owners = {left >= 0 ? left : right, left >= 0 ? right : -1};
      f.boundary = (left < 0 || right < 0);
      facets_.push_back(f);
    }
  }
}

Vec2 StructuredQuadMesh::centroid(int element) const {
  const auto& q = quads_[element];
  return 0.25 * (nodes_[q[0]] + nodes_[q[1]] + nodes_[q[2]] + nodes_[q[3]]);
}

StructuredQuadMesh build_grid(int n, const Box& domain) {
  return StructuredQuadMesh(n, domain);
}

SurrogateInterface select_surrogate(const StructuredQuadMesh& mesh,
                                    const CrackCurve& curve) {
  const int n_elems = static_cast<int>(mesh.quads().size());
  std::vector<std::int8_t> side(n_elems);
  std::vector<std::uint8_t> clamped(n_elems);
  for (int e = 0; e < n_elems; ++e) {
    const Projection proj = project_to_crack(curve, mesh.centroid(e));
    const double sgn = (mesh.centroid(e) - proj.point).dot(proj.normal);
    side[e] = (std::abs(sgn) < 1e-14 || sgn > 0.0) ? +1 : -1;
    clamped[e] = proj.on_endpoint ? 1 : 0;
  }

  // Candidate facets: interior, owners on opposite sides, and at least one
  // owner whose centroid projects to a non-endpoint curve point (this
  // truncates the staircase near crack tips).
  struct Cand {
    std::array<int, 2> nodes;
    int plus, minus;
    Vec2 normal;
  };
  std::vector<Cand> cands;
  for (const Facet& f : mesh.facets()) {
    if (f.boundary) continue;
    const int a = f.owners[0], b = f.owners[1];
    if (side[a] == side[b]) continue;
    if (clamped[a] && clamped[b]) continue;
    Cand c;
    c.nodes = f.nodes;
    c.plus = (side[a] > 0) ? a : b;
    c.minus = (side[a] > 0) ? b : a;
    const Vec2 d = mesh.centroid(c.plus) - mesh.centroid(c.minus);
    const Vec2 t = mesh.nodes()[f.nodes[1]] - mesh.nodes()[f.nodes[0]];
    Vec2 nrm(-t.y(), t.x());
    nrm.normalize();
    if (nrm.dot(d) < 0.0) nrm = -nrm;
    c.normal = nrm;
    cands.push_back(c);
  }
  if (cands.empty()) {
    throw ConfigError("empty surrogate: crack does not cross any interior mesh facet");
  }

  // Order the facets into a single connected path.
  std::map<int, std::vector<int>> node2facet;
  for (int k = 0; k < static_cast<int>(cands.size()); ++k) {
    node2facet[cands[k].nodes[0]].push_back(k);
    node2facet[cands[k].nodes[1]].push_back(k);
  }
  std::vector<int> endpoints;
  for (const auto& [node, fs] : node2facet) {
    if (fs.size() == 1) endpoints.push_back(node);
    if (fs.size() > 2) {
      std::ostringstream oss;
      oss << "surrogate path branches at node " << node << " (degree "
          << fs.size() << "); crack/mesh configuration unsupported";
      throw GeometryError(oss.str());
    }
  }
  if (endpoints.size() != 2) {
    std::ostringstream oss;
    oss << "surrogate path is not a simple open path: " << endpoints.size()
        << " endpoints over " << cands.size() << " facets";
    throw GeometryError(oss.str());
  }

  // Start from the endpoint that projects to the smaller arc-length
  // parameter so the path runs along increasing s.
  auto end_s = [&](int node) {
    return project_to_crack(curve, mesh.nodes()[node]).s;
  };
  int start = endpoints[0];
  if (end_s(endpoints[1]) < end_s(endpoints[0])) start = endpoints[1];

  SurrogateInterface surrogate;
  surrogate.element_side = std::move(side);
  std::vector<bool> used(cands.size(), false);
  int node = start;
  surrogate.path_nodes.push_back(node);
  for (;;) {
    int next_facet = -1;
    for (int k : node2facet[node]) {
      if (!used[k]) {
        next_facet = k;
        break;
      }
    }
    if (next_facet < 0) break;
    used[next_facet] = true;
    const Cand& c = cands[next_facet];
    const int other = (c.nodes[0] == node) ? c.nodes[1] : c.nodes[0];
    SurrogateFacet sf;
    sf.nodes = {node, other};
    sf.elem_plus = c.plus;
    sf.elem_minus = c.minus;
    sf.normal = c.normal;
    surrogate.facets.push_back(sf);
    surrogate.path_nodes.push_back(other);
    node = other;
  }
  if (std::count(used.begin(), used.end(), true) !=
      static_cast<long>(cands.size())) {
    std::ostringstream oss;
    oss << "surrogate path is disconnected: walked "
        << std::count(used.begin(), used.end(), true) << " of " << cands.size()
        << " facets; unreached facet nodes:";
    for (std::size_t k = 0; k < cands.size(); ++k) {
      if (!used[k]) oss << " (" << cands[k].nodes[0] << "," << cands[k].nodes[1] << ")";
    }
    throw GeometryError(oss.str());
  }

  surrogate.facets.front().tip[0] = true;
  surrogate.facets.back().tip[1] = true;

  const Box& box = mesh.domain();
  const double tol = 1e-9 * std::min(mesh.hx(), mesh.hy());
  auto on_boundary = [&](const Vec2& p) {
    return std::abs(p.x() - box.lo.x()) < tol || std::abs(p.x() - box.hi.x()) < tol ||
           std::abs(p.y() - box.lo.y()) < tol || std::abs(p.y() - box.hi.y()) < tol;
  };
  surrogate.reaches_boundary[0] = on_boundary(mesh.nodes()[surrogate.path_nodes.front()]);
  surrogate.reaches_boundary[1] = on_boundary(mesh.nodes()[surrogate.path_nodes.back()]);
  return surrogate;
}

void dump_classification(const StructuredQuadMesh& mesh,
                         const SurrogateInterface& surrogate, std::ostream& os) {
  os << "element,side\n";
  for (std::size_t e = 0; e < mesh.quads().size(); ++e) {
    os << e << "," << static_cast<int>(surrogate.element_side[e]) << "\n";
  }
  os << "facet_node_a,facet_node_b,elem_plus,elem_minus\n";
  for (const auto& f : surrogate.facets) {
    os << f.nodes[0] << "," << f.nodes[1] << "," << f.elem_plus << ","
       << f.elem_minus << "\n";
  }
}

SplitMesh split_along(const StructuredQuadMesh& mesh,
                      const std::vector<SurrogateInterface>& surrogates) {
  SplitMesh out;
  out.nodes_ = mesh.nodes();
  out.quads_ = mesh.quads();
  out.domain_ = mesh.domain();
  out.hx_ = mesh.hx();
  out.hy_ = mesh.hy();
  out.base_node_count_ = static_cast<int>(mesh.nodes().size());

  // Non-intersecting cracks only: surrogate paths must not share nodes.
  std::set<int> seen_nodes;
  for (const auto& s : surrogates) {
    for (int v : s.path_nodes) {
      if (!seen_nodes.insert(v).second) {
        throw ConfigError("surrogate paths of distinct cracks overlap at node " +
                          std::to_string(v));
      }
    }
  }

  const Box& box = mesh.domain();
  const double tol = 1e-9 * std::min(mesh.hx(), mesh.hy());
  auto on_boundary = [&](const Vec2& p) {
    return std::abs(p.x() - box.lo.x()) < tol || std::abs(p.x() - box.hi.x()) < tol ||
           std::abs(p.y() - box.lo.y()) < tol || std::abs(p.y() - box.hi.y()) < tol;
  };

  for (const SurrogateInterface& surrogate : surrogates) {
    // Node -> elements adjacency over the current connectivity.
    std::map<int, std::vector<int>> node2elems;
    for (int e = 0; e < static_cast<int>(out.quads_.size()); ++e) {
      for (int v : out.quads_[e]) node2elems[v].push_back(e);
    }

    CrackTopology topo;
    topo.reaches_boundary = surrogate.reaches_boundary;
    const auto& path = surrogate.path_nodes;
    const int n_path = static_cast<int>(path.size());
    topo.path_plus.resize(n_path);
    topo.path_minus.resize(n_path);
    topo.path_coords.resize(n_path);

    for (int k = 0; k < n_path; ++k) {
      const int v = path[k];
      topo.path_coords[k] = out.nodes_[v];
      const bool is_tip = (k == 0 || k == n_path - 1);
      const bool keep_single = is_tip && !on_boundary(out.nodes_[v]);
      if (keep_single) {
        topo.path_plus[k] = v;
        topo.path_minus[k] = v;
        continue;
      }
      const int plus_id = static_cast<int>(out.nodes_.size());
      out.nodes_.push_back(out.nodes_[v]);
      int n_plus = 0, n_minus = 0;
      for (int e : node2elems[v]) {
        if (surrogate.element_side[e] > 0) {
          for (int& w : out.quads_[e]) {
            if (w == v) w = plus_id;
          }
          ++n_plus;
        } else {
          ++n_minus;
        }
      }
      if (n_plus == 0 || n_minus == 0) {
        throw GeometryError("node duplication left node " + std::to_string(v) +
                            " with a one-sided element patch");
      }
      topo.path_plus[k] = plus_id;
      topo.path_minus[k] = v;
      out.dup_map_.push_back({v, plus_id, v});
    }

    for (int k = 0; k < static_cast<int>(surrogate.facets.size()); ++k) {
      CrackTopology::FacetRecord rec;
      rec.elem_plus = surrogate.facets[k].elem_plus;
      rec.elem_minus = surrogate.facets[k].elem_minus;
      rec.normal = surrogate.facets[k].normal;
      rec.plus_nodes = {topo.path_plus[k], topo.path_plus[k + 1]};
      rec.minus_nodes = {topo.path_minus[k], topo.path_minus[k + 1]};
      topo.facets.push_back(rec);
    }
    out.cracks_.push_back(std::move(topo));
  }

  out.path_offsets_.resize(out.cracks_.size() + 1, 0);
  for (std::size_t c = 0; c < out.cracks_.size(); ++c) {
    out.path_offsets_[c + 1] =
        out.path_offsets_[c] + static_cast<int>(out.cracks_[c].path_plus.size());
  }
  return out;
}

int SplitMesh::path_node_count() const {
  return path_offsets_.empty() ? 0 : path_offsets_.back();
}

int SplitMesh::path_node_offset(int crack) const { return path_offsets_[crack]; }

Vec2 SplitMesh::reference_coords(int element, const Vec2& x) const {
  const Vec2 origin = nodes_[quads_[element][0]];
  return Vec2(2.0 * (x.x() - origin.x()) / hx_ - 1.0,
              2.0 * (x.y() - origin.y()) / hy_ - 1.0);
}

namespace {

ShiftSample make_sample(const CrackCurve& curve, const Vec2& pos,
                        const Vec2& surrogate_normal) {
  const Projection proj = project_to_crack(curve, pos);
  ShiftSample smp;
  smp.pos = pos;
  smp.gap = proj.gap;
  smp.normal = proj.normal;
  smp.tangent = proj.tangent;
  smp.cos_phi = surrogate_normal.dot(proj.normal);
  smp.n_perp = surrogate_normal - smp.cos_phi * proj.normal;
  smp.s = proj.s;
  smp.flagged = (smp.cos_phi <= 0.0);
  return smp;
}

}  // namespace

ShiftData shift_data(const SplitMesh& mesh, int crack_index,
                     const CrackCurve& curve, int n_gauss) {
  const CrackTopology& topo = mesh.cracks()[crack_index];
  const QuadRule1D rule = gauss_1d(n_gauss);

  ShiftData data;
  data.crack_length = curve.total_length();
  data.facets.reserve(topo.facets.size());
  for (const auto& f : topo.facets) {
    const Vec2 a = mesh.nodes()[f.minus_nodes[0]];
    const Vec2 b = mesh.nodes()[f.minus_nodes[1]];
    ShiftData::FacetShift fs;
    fs.length = (b - a).norm();
    fs.quad.reserve(rule.points.size());
    for (double xi : rule.points) {
      const Vec2 pos = a + 0.5 * (xi + 1.0) * (b - a);
      fs.quad.push_back(make_sample(curve, pos, f.normal));
      data.any_flagged = data.any_flagged || fs.quad.back().flagged;
    }
    fs.node[0] = make_sample(curve, a, f.normal);
    fs.node[1] = make_sample(curve, b, f.normal);
    data.facets.push_back(std::move(fs));
  }

  // Path-node samples: surrogate normal averaged over the adjacent facets
  // (renormalized) so corner nodes get a well-defined mismatch decomposition.
  const int n_path = static_cast<int>(topo.path_coords.size());
  data.path_nodes.resize(n_path);
  for (int k = 0; k < n_path; ++k) {
    Vec2 nrm = Vec2::Zero();
    if (k > 0) nrm += topo.facets[k - 1].normal;
    if (k < n_path - 1) nrm += topo.facets[k].normal;
    if (nrm.norm() < 1e-14) nrm = topo.facets[std::max(0, k - 1)].normal;
    nrm.normalize();
    data.path_nodes[k] = make_sample(curve, topo.path_coords[k], nrm);
  }
  return data;
}

}  // namespace sifem
