// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace gelforce {

using Vec3 = Eigen::Vector3d;
using Element = std::array<int, 10>;  // internal node indices, C3D10 order

/// One element face: internal element index and face number 0..3 (S1..S4).
struct SurfaceFace {
  int element = 0;
  int face = 0;

  friend bool operator==(const SurfaceFace&, const SurfaceFace&) = default;
};

/// Tetrahedral C3D10 mesh in millimetres.
///
/// Nodes and elements carry external ids (as found in the input deck) and
/// are addressed internally by dense indices in insertion order. Sets store
/// internal indices. A mesh is built once and then shared read-only.
class Mesh {
 public:
  int add_node(int id, const Vec3& x);
  /// `nodes` are external node ids; they must already exist.
  int add_element(int id, const std::array<int, 10>& node_ids);

  void add_node_set(const std::string& name, std::vector<int> indices);
  void add_element_set(const std::string& name, std::vector<int> indices);
  void add_surface(const std::string& name, std::vector<SurfaceFace> faces);

  int num_nodes() const { return static_cast<int>(node_ids_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }

  int node_id(int index) const { return node_ids_[index]; }
  int element_id(int index) const { return element_ids_[index]; }
  const Vec3& node(int index) const { return coords_[index]; }
  const Element& element(int index) const { return elements_[index]; }

  const std::vector<int>& node_ids() const { return node_ids_; }
  const std::vector<int>& element_ids() const { return element_ids_; }
  const std::vector<Vec3>& coords() const { return coords_; }
  const std::vector<Element>& elements() const { return elements_; }

  /// Throws ValidationError for unknown ids.
  int node_index(int id) const;
  int element_index(int id) const;
  bool has_node(int id) const { return node_index_.count(id) != 0; }

  const std::map<std::string, std::vector<int>>& node_sets() const { return node_sets_; }
  const std::map<std::string, std::vector<int>>& element_sets() const { return element_sets_; }
  const std::map<std::string, std::vector<SurfaceFace>>& surfaces() const { return surfaces_; }

  /// Throws ValidationError when the set does not exist.
  const std::vector<int>& node_set(const std::string& name) const;
  const std::vector<SurfaceFace>& surface(const std::string& name) const;

  /// Six face node indices (corners then mid-edge), see tet10::kFaces.
  std::array<int, 6> face_nodes(const SurfaceFace& f) const;

  /// Sorted unique node indices touched by the faces of a surface set.
  std::vector<int> surface_nodes(const std::string& name) const;

 private:
  std::vector<int> node_ids_;
  std::vector<Vec3> coords_;
  std::vector<int> element_ids_;
  std::vector<Element> elements_;
  std::unordered_map<int, int> node_index_;
  std::unordered_map<int, int> element_index_;
  std::map<std::string, std::vector<int>> node_sets_;
  std::map<std::string, std::vector<int>> element_sets_;
  std::map<std::string, std::vector<SurfaceFace>> surfaces_;
};

/// Checks every structural invariant; throws ValidationError on the first
/// violation: distinct existing node references, positive corner volume,
/// positive Jacobian at each quadrature point, mid-edge nodes within 10% of
/// the edge length from the edge midpoint, and valid surface faces.
void validate(const Mesh& mesh);

/// Sum of element volumes (mm^3) by Gauss quadrature.
double volume(const Mesh& mesh);

struct InpParseResult {
  Mesh mesh;
  std::vector<std::string> warnings;
};

/// Reads the Abaqus-style subset: *NODE, *ELEMENT TYPE=C3D10, *NSET, *ELSET,
/// *SURFACE (TYPE=ELEMENT). Other keyword blocks are skipped and noted in
/// `warnings`. The result is validated.
InpParseResult parse_inp(std::istream& in);
InpParseResult parse_inp(std::string_view text);

/// True when the element set "EALL" lists every element in order.
bool has_full_eall(const Mesh& mesh);

/// Writes nodes, elements and sets in a fixed order. Coordinates use the
/// shortest round-trip representation, so parse(write(m)) == m.
void write_inp_mesh(std::ostream& out, const Mesh& mesh);

struct BoxSpec {
  Vec3 dimensions{32.0, 24.0, 5.0};
  std::array<int, 3> subdivisions{24, 18, 4};
  /// Ratio of uniform layer thickness to top-layer thickness (>= 1).
  /// Layers thicken geometrically toward the bottom.
  double bias = 2.0;
};

/// Structured box in x in [-dx/2, dx/2], y in [-dy/2, dy/2], z in [-dz, 0].
/// Each hexahedral cell is split into six tetrahedra sharing its main
/// diagonal. The top face (z = 0) is the surface "CONTACT"; the bottom
/// nodes form the node set "FIXED".
Mesh meshgen_box(const BoxSpec& spec);

/// Default gel slab used throughout (the BoxSpec defaults): 32 x 24 x 5 mm,
/// 24 x 18 x 4 cells with the top layer refined by a factor 2.
BoxSpec default_gel_box();

}  // namespace gelforce
