// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <functional>
#include <sstream>

#include <Eigen/Dense>

#include "gelforce/error.hpp"
#include "gelforce/tet10.hpp"
#include "text.hpp"

namespace gelforce {

int Mesh::add_node(int id, const Vec3& x) {
  if (node_index_.count(id)) throw ValidationError("duplicate node id " + std::to_string(id));
  const int idx = num_nodes();
  node_ids_.push_back(id);
  coords_.push_back(x);
  node_index_.emplace(id, idx);
  return idx;
}

int Mesh::add_element(int id, const std::array<int, 10>& node_ids) {
  if (element_index_.count(id)) throw ValidationError("duplicate element id " + std::to_string(id));
  Element e;
  for (int a = 0; a < 10; ++a) {
    auto it = node_index_.find(node_ids[a]);
    if (it == node_index_.end()) {
      throw ValidationError("element " + std::to_string(id) + " references missing node " +
                            std::to_string(node_ids[a]));
    }
    e[a] = it->second;
  }
  const int idx = num_elements();
  element_ids_.push_back(id);
  elements_.push_back(e);
  element_index_.emplace(id, idx);
  return idx;
}

void Mesh::add_node_set(const std::string& name, std::vector<int> indices) {
  auto& s = node_sets_[name];
  s.insert(s.end(), indices.begin(), indices.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

void Mesh::add_element_set(const std::string& name, std::vector<int> indices) {
  auto& s = element_sets_[name];
  s.insert(s.end(), indices.begin(), indices.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

void Mesh::add_surface(const std::string& name, std::vector<SurfaceFace> faces) {
  auto& s = surfaces_[name];
  s.insert(s.end(), faces.begin(), faces.end());
}

int Mesh::node_index(int id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw ValidationError("missing node " + std::to_string(id));
  return it->second;
}

int Mesh::element_index(int id) const {
  auto it = element_index_.find(id);
  if (it == element_index_.end()) throw ValidationError("missing element " + std::to_string(id));
  return it->second;
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets_.find(name);
  if (it == node_sets_.end()) throw ValidationError("no node set named " + name);
  return it->second;
}

const std::vector<SurfaceFace>& Mesh::surface(const std::string& name) const {
  auto it = surfaces_.find(name);
  if (it == surfaces_.end()) throw ValidationError("no surface named " + name);
  return it->second;
}

std::array<int, 6> Mesh::face_nodes(const SurfaceFace& f) const {
  const Element& e = elements_[f.element];
  std::array<int, 6> out;
  for (int k = 0; k < 6; ++k) out[k] = e[tet10::kFaces[f.face][k]];
  return out;
}

std::vector<int> Mesh::surface_nodes(const std::string& name) const {
  std::vector<int> out;
  for (const SurfaceFace& f : surface(name)) {
    for (int n : face_nodes(f)) out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

Eigen::Matrix<double, 3, 10> element_coords(const Mesh& mesh, int e) {
  Eigen::Matrix<double, 3, 10> x;
  const Element& el = mesh.element(e);
  for (int a = 0; a < 10; ++a) x.col(a) = mesh.node(el[a]);
  return x;
}

}  // namespace

void validate(const Mesh& mesh) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    const std::string tag = "element " + std::to_string(mesh.element_id(e));
    for (int a = 0; a < 10; ++a) {
      if (el[a] < 0 || el[a] >= mesh.num_nodes()) throw ValidationError(tag + ": node index out of range");
      for (int b = 0; b < a; ++b) {
        if (el[a] == el[b]) throw ValidationError(tag + ": repeated node " + std::to_string(mesh.node_id(el[a])));
      }
    }
    const auto x = element_coords(mesh, e);
    Eigen::Matrix3d corner;
    corner << x.col(1) - x.col(0), x.col(2) - x.col(0), x.col(3) - x.col(0);
    if (!(corner.determinant() > 0.0)) throw ValidationError(tag + ": non-positive corner Jacobian");
    for (int k = 0; k < 6; ++k) {
      const Vec3 a = x.col(tet10::kEdges[k][0]);
      const Vec3 b = x.col(tet10::kEdges[k][1]);
      const double off = (x.col(4 + k) - 0.5 * (a + b)).norm();
      if (off > 0.1 * (b - a).norm()) throw ValidationError(tag + ": mid-edge node too far from edge midpoint");
    }
    for (const auto& qp : tet10::gauss4()) {
      const Eigen::Matrix3d jac = x * tet10::shape_gradient<double>(qp.xi);
      if (!(jac.determinant() > 0.0)) throw ValidationError(tag + ": non-positive Jacobian at a quadrature point");
    }
  }
  for (const auto& [name, faces] : mesh.surfaces()) {
    for (const SurfaceFace& f : faces) {
      if (f.element < 0 || f.element >= mesh.num_elements() || f.face < 0 || f.face > 3) {
        throw ValidationError("surface " + name + " references an invalid element face");
      }
    }
  }
  for (const auto& [name, nodes] : mesh.node_sets()) {
    for (int n : nodes) {
      if (n < 0 || n >= mesh.num_nodes()) throw ValidationError("node set " + name + " is out of range");
    }
  }
}

double volume(const Mesh& mesh) {
  double v = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto x = element_coords(mesh, e);
    for (const auto& qp : tet10::gauss4()) {
      v += qp.weight * (x * tet10::shape_gradient<double>(qp.xi)).determinant();
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// .inp reader

namespace {

struct Keyword {
  std::string name;                           // upper case, without '*'
  std::map<std::string, std::string> params;  // upper-case keys and values
  std::set<std::string> flags;                // parameters without '='
};

Keyword parse_keyword(std::string_view line) {
  Keyword kw;
  auto fields = text::split_fields(line.substr(1));
  kw.name = text::upper(fields.front().value);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const std::string_view f = fields[i].value;
    if (f.empty()) continue;
    const auto eq = f.find('=');
    if (eq == std::string_view::npos) {
      kw.flags.insert(text::upper(f));
    } else {
      // Names are case-insensitive; store them upper case.
      kw.params[text::upper(text::trim(f.substr(0, eq)))] = text::upper(text::trim(f.substr(eq + 1)));
    }
  }
  return kw;
}

class InpReader {
 public:
  explicit InpReader(std::istream& in) : in_(in) {}

  InpParseResult run() {
    std::string line;
    enum class Block { kNone, kNode, kElement, kNset, kElset, kSurface, kSkip } block = Block::kNone;
    Keyword kw;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string_view t = text::trim(line);
      if (t.empty() || t.rfind("**", 0) == 0) continue;
      if (t.front() == '*') {
        flush_element();
        kw = parse_keyword(t);
        block = Block::kSkip;
        if (kw.name == "NODE") {
          block = Block::kNode;
        } else if (kw.name == "ELEMENT") {
          const std::string type = text::upper(kw.params.count("TYPE") ? kw.params["TYPE"] : "");
          if (type == "C3D10") {
            block = Block::kElement;
          } else {
            warn("element type '" + type + "' is not supported; block skipped");
          }
        } else if (kw.name == "NSET") {
          block = kw.params.count("NSET") ? Block::kNset : Block::kSkip;
        } else if (kw.name == "ELSET") {
          block = kw.params.count("ELSET") ? Block::kElset : Block::kSkip;
        } else if (kw.name == "SURFACE") {
          const std::string type = text::upper(kw.params.count("TYPE") ? kw.params["TYPE"] : "ELEMENT");
          if (type == "ELEMENT" && kw.params.count("NAME")) {
            block = Block::kSurface;
          } else {
            warn("*SURFACE of type " + type + " is not supported; block skipped");
          }
        } else {
          warn("keyword *" + kw.name + " is not supported; block skipped");
        }
        continue;
      }
      switch (block) {
        case Block::kNode: node_line(t, kw); break;
        case Block::kElement: element_line(t, kw); break;
        case Block::kNset: set_line(t, kw, kw.params["NSET"], nsets_); break;
        case Block::kElset: set_line(t, kw, kw.params["ELSET"], elsets_); break;
        case Block::kSurface: surface_line(t, kw.params["NAME"]); break;
        case Block::kNone: warn("data line outside any keyword block ignored"); break;
        case Block::kSkip: break;
      }
    }
    flush_element();
    if (!pending_.values.empty()) throw ParseError("incomplete element at end of input", line_no_, 0);
    return assemble();
  }

 private:
  struct PendingElement {
    std::vector<long long> values;
    std::string elset;
    std::size_t line = 0;
  };

  void warn(const std::string& msg) { warnings_.push_back("line " + std::to_string(line_no_) + ": " + msg); }

  long long need_int(const text::Field& f) const {
    auto v = text::parse_int(f.value);
    if (!v) throw ParseError("malformed integer field '" + std::string(f.value) + "'", line_no_, f.column);
    return *v;
  }

  double need_double(const text::Field& f) const {
    auto v = text::parse_double(f.value);
    if (!v) throw ParseError("malformed numeric field '" + std::string(f.value) + "'", line_no_, f.column);
    return *v;
  }

  void node_line(std::string_view t, const Keyword& kw) {
    auto fields = text::split_fields(t);
    if (fields.size() < 2) throw ParseError("node line needs an id and coordinates", line_no_, 1);
    const long long id = need_int(fields[0]);
    Vec3 x = Vec3::Zero();
    for (std::size_t k = 1; k < fields.size() && k <= 3; ++k) {
      if (fields[k].value.empty()) continue;
      x(static_cast<int>(k - 1)) = need_double(fields[k]);
    }
    if (node_lines_.count(id)) throw ParseError("duplicate node id " + std::to_string(id), line_no_, fields[0].column);
    node_lines_[id] = line_no_;
    nodes_.push_back({static_cast<int>(id), x});
    auto it = kw.params.find("NSET");
    if (it != kw.params.end()) nsets_[it->second].push_back({std::to_string(id), line_no_});
  }

  void element_line(std::string_view t, const Keyword& kw) {
    auto fields = text::split_fields(t);
    if (pending_.values.empty()) {
      pending_.line = line_no_;
      auto it = kw.params.find("ELSET");
      pending_.elset = it == kw.params.end() ? "" : it->second;
    }
    for (const auto& f : fields) {
      if (f.value.empty()) continue;
      pending_.values.push_back(need_int(f));
    }
    if (pending_.values.size() > 11) throw ParseError("C3D10 element has more than 10 nodes", line_no_, 1);
    if (pending_.values.size() == 11) flush_element();
  }

  void flush_element() {
    if (pending_.values.empty()) return;
    if (pending_.values.size() != 11) throw ParseError("C3D10 element needs 10 node ids", pending_.line, 1);
    const long long id = pending_.values[0];
    if (element_lines_.count(id)) throw ParseError("duplicate element id " + std::to_string(id), pending_.line, 1);
    element_lines_[id] = pending_.line;
    std::array<int, 10> n;
    for (int a = 0; a < 10; ++a) n[a] = static_cast<int>(pending_.values[a + 1]);
    elements_.push_back({static_cast<int>(id), n, pending_.line});
    if (!pending_.elset.empty()) elsets_[pending_.elset].push_back({std::to_string(id), pending_.line});
    pending_ = {};
  }

  struct SetEntry {
    std::string token;
    std::size_t line;
  };

  void set_line(std::string_view t, const Keyword& kw, const std::string& name,
                std::map<std::string, std::vector<SetEntry>>& sets) {
    auto fields = text::split_fields(t);
    auto& s = sets[name];
    if (kw.flags.count("GENERATE")) {
      if (fields.size() < 2) throw ParseError("GENERATE needs first, last[, step]", line_no_, 1);
      const long long a = need_int(fields[0]);
      const long long b = need_int(fields[1]);
      const long long step = fields.size() > 2 && !fields[2].value.empty() ? need_int(fields[2]) : 1;
      if (step <= 0) throw ParseError("GENERATE step must be positive", line_no_, fields[2].column);
      for (long long i = a; i <= b; i += step) s.push_back({std::to_string(i), line_no_});
      return;
    }
    for (const auto& f : fields) {
      if (!f.value.empty()) s.push_back({text::upper(f.value), line_no_});
    }
  }

  void surface_line(std::string_view t, const std::string& name) {
    auto fields = text::split_fields(t);
    if (fields.size() < 2) throw ParseError("surface line needs an element and a face label", line_no_, 1);
    const std::string face = text::upper(fields[1].value);
    if (face.size() != 2 || face[0] != 'S' || face[1] < '1' || face[1] > '4') {
      throw ParseError("face label must be S1..S4, got '" + std::string(fields[1].value) + "'", line_no_,
                       fields[1].column);
    }
    surfaces_[name].push_back({text::upper(fields[0].value), face[1] - '1', line_no_});
  }

  // Set members are either ids or names of sets of the same kind.
  std::vector<int> resolve(const std::map<std::string, std::vector<SetEntry>>& sets, const std::string& name,
                           const std::function<int(int, std::size_t)>& to_index, int depth) const {
    if (depth > 16) throw ParseError("set nesting too deep in " + name, 0, 0);
    std::vector<int> out;
    for (const SetEntry& e : sets.at(name)) {
      if (auto id = text::parse_int(e.token)) {
        out.push_back(to_index(static_cast<int>(*id), e.line));
      } else if (sets.count(e.token)) {
        auto sub = resolve(sets, e.token, to_index, depth + 1);
        out.insert(out.end(), sub.begin(), sub.end());
      } else {
        throw ParseError("unknown set member '" + e.token + "'", e.line, 0);
      }
    }
    return out;
  }

  InpParseResult assemble() {
    InpParseResult r;
    Mesh& m = r.mesh;
    for (const auto& [id, x] : nodes_) m.add_node(id, x);
    for (const auto& e : elements_) {
      for (int n : e.nodes) {
        if (!m.has_node(n)) {
          throw ParseError("element " + std::to_string(e.id) + " references missing node " + std::to_string(n),
                           e.line, 0);
        }
      }
      m.add_element(e.id, e.nodes);
    }
    auto node_to_index = [&](int id, std::size_t line) {
      if (!m.has_node(id)) throw ParseError("node set references missing node " + std::to_string(id), line, 0);
      return m.node_index(id);
    };
    auto elem_to_index = [&](int id, std::size_t line) {
      try {
        return m.element_index(id);
      } catch (const ValidationError&) {
        throw ParseError("set references missing element " + std::to_string(id), line, 0);
      }
    };
    for (const auto& [name, entries] : nsets_) m.add_node_set(name, resolve(nsets_, name, node_to_index, 0));
    for (const auto& [name, entries] : elsets_) m.add_element_set(name, resolve(elsets_, name, elem_to_index, 0));
    for (const auto& [name, entries] : surfaces_) {
      std::vector<SurfaceFace> faces;
      for (const auto& s : entries) {
        if (auto id = text::parse_int(s.member)) {
          faces.push_back({elem_to_index(static_cast<int>(*id), s.line), s.face});
        } else {
          auto it = m.element_sets().find(s.member);
          if (it == m.element_sets().end()) throw ParseError("unknown element set '" + s.member + "'", s.line, 0);
          for (int e : it->second) faces.push_back({e, s.face});
        }
      }
      m.add_surface(name, std::move(faces));
    }
    validate(m);
    r.warnings = std::move(warnings_);
    return r;
  }

  struct NodeRec {
    int id;
    Vec3 x;
  };
  struct ElementRec {
    int id;
    std::array<int, 10> nodes;
    std::size_t line;
  };
  struct SurfaceRec {
    std::string member;
    int face;
    std::size_t line;
  };

  std::istream& in_;
  std::size_t line_no_ = 0;
  std::vector<std::string> warnings_;
  std::vector<NodeRec> nodes_;
  std::vector<ElementRec> elements_;
  std::map<long long, std::size_t> node_lines_;
  std::map<long long, std::size_t> element_lines_;
  PendingElement pending_;
  std::map<std::string, std::vector<SetEntry>> nsets_;
  std::map<std::string, std::vector<SetEntry>> elsets_;
  std::map<std::string, std::vector<SurfaceRec>> surfaces_;
};

}  // namespace

InpParseResult parse_inp(std::istream& in) { return InpReader(in).run(); }

InpParseResult parse_inp(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_inp(in);
}

// ---------------------------------------------------------------------------
// .inp writer

namespace {

void write_id_list(std::ostream& out, const std::vector<int>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    out << ((i + 1) % 16 == 0 || i + 1 == ids.size() ? "\n" : ", ");
  }
}

}  // namespace

bool has_full_eall(const Mesh& mesh) {
  auto it = mesh.element_sets().find("EALL");
  if (it == mesh.element_sets().end() || static_cast<int>(it->second.size()) != mesh.num_elements()) return false;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (it->second[e] != e) return false;
  }
  return true;
}

void write_inp_mesh(std::ostream& out, const Mesh& mesh) {
  out << "*NODE\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec3& x = mesh.node(n);
    out << mesh.node_id(n) << ", " << text::format_double(x.x()) << ", " << text::format_double(x.y()) << ", "
        << text::format_double(x.z()) << "\n";
  }
  out << "*ELEMENT, TYPE=C3D10" << (has_full_eall(mesh) ? ", ELSET=EALL" : "") << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    out << mesh.element_id(e);
    for (int n : mesh.element(e)) out << ", " << mesh.node_id(n);
    out << "\n";
  }
  for (const auto& [name, nodes] : mesh.node_sets()) {
    if (nodes.empty()) continue;
    out << "*NSET, NSET=" << name << "\n";
    std::vector<int> ids;
    for (int n : nodes) ids.push_back(mesh.node_id(n));
    write_id_list(out, ids);
  }
  for (const auto& [name, elems] : mesh.element_sets()) {
    if (elems.empty() || (name == "EALL" && has_full_eall(mesh))) continue;
    out << "*ELSET, ELSET=" << name << "\n";
    std::vector<int> ids;
    for (int e : elems) ids.push_back(mesh.element_id(e));
    write_id_list(out, ids);
  }
  for (const auto& [name, faces] : mesh.surfaces()) {
    out << "*SURFACE, NAME=" << name << ", TYPE=ELEMENT\n";
    for (const SurfaceFace& f : faces) out << mesh.element_id(f.element) << ", S" << (f.face + 1) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Structured box generator

namespace {

// Layer interfaces from the top (z = 0) down to -depth, geometric growth
// so that the top layer is `bias` times thinner than a uniform layer.
std::vector<double> graded_levels(double depth, int layers, double bias) {
  std::vector<double> thickness(layers, depth / layers);
  if (layers > 1 && bias > 1.0) {
    const double top = depth / (layers * bias);
    auto total = [&](double q) {
      double s = 0.0, t = top;
      for (int k = 0; k < layers; ++k, t *= q) s += t;
      return s;
    };
    double lo = 1.0, hi = 2.0;
    while (total(hi) < depth) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid) < depth ? lo : hi) = mid;
    }
    const double q = 0.5 * (lo + hi);
    double t = top;
    for (int k = 0; k < layers; ++k, t *= q) thickness[k] = t;
  }
  std::vector<double> z(layers + 1, 0.0);  // z[0] = 0 (top)
  for (int k = 0; k < layers; ++k) z[k + 1] = z[k] - thickness[k];
  z[layers] = -depth;
  return z;
}

}  // namespace

BoxSpec default_gel_box() { return BoxSpec{}; }

Mesh meshgen_box(const BoxSpec& spec) {
  for (int k = 0; k < 3; ++k) {
    if (!(spec.dimensions(k) > 0.0)) throw ValidationError("box dimensions must be positive");
    if (spec.subdivisions[k] < 1) throw ValidationError("box subdivisions must be at least 1");
  }
  if (!(spec.bias >= 1.0)) throw ValidationError("surface bias must be >= 1");

  const int nx = spec.subdivisions[0], ny = spec.subdivisions[1], nz = spec.subdivisions[2];
  const int fx = 2 * nx + 1, fy = 2 * ny + 1, fz = 2 * nz + 1;  // fine lattice including mid-edge nodes
  const double hx = spec.dimensions.x() / nx, hy = spec.dimensions.y() / ny;
  const std::vector<double> levels = graded_levels(spec.dimensions.z(), nz, spec.bias);

  // Fine lattice index kk counts from the bottom so that ids grow upward.
  auto fine_z = [&](int kk) {
    const int from_top = (fz - 1) - kk;  // fine steps from the top
    const int layer = from_top / 2;
    if (from_top % 2 == 0) return levels[layer];
    return 0.5 * (levels[layer] + levels[layer + 1]);
  };
  auto fine_id = [&](int i, int j, int k) { return 1 + i + fx * (j + fy * k); };

  Mesh mesh;
  for (int k = 0; k < fz; ++k) {
    for (int j = 0; j < fy; ++j) {
      for (int i = 0; i < fx; ++i) {
        const Vec3 x(-0.5 * spec.dimensions.x() + 0.5 * hx * i, -0.5 * spec.dimensions.y() + 0.5 * hy * j,
                     fine_z(k));
        mesh.add_node(fine_id(i, j, k), x);
      }
    }
  }

  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  int next_id = 1;
  std::vector<SurfaceFace> top;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        for (const auto& perm : kPerms) {
          // Path along a main diagonal of the cell, one axis at a time. The
          // diagonal is reflected in the lower half along x and y so the
          // decomposition is mirror symmetric about the box center; shared
          // faces still split along the same diagonal, so the mesh conforms.
          const std::array<int, 3> step = {i < nx / 2 ? -2 : 2, j < ny / 2 ? -2 : 2, 2};
          std::array<std::array<int, 3>, 4> corner{};
          corner[0] = {step[0] < 0 ? 2 * i + 2 : 2 * i, step[1] < 0 ? 2 * j + 2 : 2 * j, 2 * k};
          for (int s = 1; s < 4; ++s) {
            corner[s] = corner[s - 1];
            corner[s][perm[s - 1]] += step[perm[s - 1]];
          }
          auto pos = [&](const std::array<int, 3>& f) { return mesh.node(mesh.node_index(fine_id(f[0], f[1], f[2]))); };
          Eigen::Matrix3d jac;
          jac << pos(corner[1]) - pos(corner[0]), pos(corner[2]) - pos(corner[0]), pos(corner[3]) - pos(corner[0]);
          if (jac.determinant() < 0.0) std::swap(corner[1], corner[2]);
          std::array<int, 10> ids;
          for (int c = 0; c < 4; ++c) ids[c] = fine_id(corner[c][0], corner[c][1], corner[c][2]);
          for (int e = 0; e < 6; ++e) {
            const auto& a = corner[tet10::kEdges[e][0]];
            const auto& b = corner[tet10::kEdges[e][1]];
            ids[4 + e] = fine_id((a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2);
          }
          const int elem = mesh.add_element(next_id++, ids);
          if (k == nz - 1) {
            for (int f = 0; f < 4; ++f) {
              bool on_top = true;
              for (int c = 0; c < 3; ++c) on_top = on_top && corner[tet10::kFaces[f][c]][2] == 2 * nz;
              if (on_top) top.push_back({elem, f});
            }
          }
        }
      }
    }
  }
  std::vector<int> bottom;
  for (int j = 0; j < fy; ++j) {
    for (int i = 0; i < fx; ++i) bottom.push_back(mesh.node_index(fine_id(i, j, 0)));
  }
  mesh.add_node_set("FIXED", std::move(bottom));
  std::vector<int> all(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) all[e] = e;
  mesh.add_element_set("EALL", std::move(all));
  mesh.add_surface("CONTACT", std::move(top));
  validate(mesh);
  return mesh;
}

}  // namespace gelforce
