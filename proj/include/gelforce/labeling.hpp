// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Force labels: contact face forces projected to the image plane and binned
// onto a regular grid by area fraction.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gelforce/fea.hpp"
#include "gelforce/mesh.hpp"
#include "gelforce/projection.hpp"

namespace gelforce {

/// Scales mapping raw forces (N) to the network's normalized range: shear
/// channels are divided by `shear`, the normal channel by `normal`.
struct NormalizationConstants {
  double shear = 1.0;
  double normal = 1.0;

  void check() const;
  friend bool operator==(const NormalizationConstants&, const NormalizationConstants&) = default;
};

/// H x W grid of (fx, fy, fz). Cells are stored in image row-major order,
/// one row of `data` per cell and one column per channel.
///
/// Sign convention: forces exerted by the gel on the indenter, i.e. the
/// negated FEA reactions, so a pressing indenter gives fz > 0. Cells on the
/// rim of a tied contact may hold small negative fz: corner nodes of
/// quadratic faces carry tensile consistent reactions there.
class ForceGrid {
 public:
  using Data = Eigen::Array<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

  ForceGrid() = default;
  ForceGrid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int cells() const { return width_ * height_; }

  double& operator()(int row, int col, int channel) { return data_(row * width_ + col, channel); }
  double operator()(int row, int col, int channel) const { return data_(row * width_ + col, channel); }
  Data& data() { return data_; }
  const Data& data() const { return data_; }

  /// Per-channel sums.
  Vec3 total() const { return data_.colwise().sum().transpose(); }

  /// Sums of factor_y x factor_x cell blocks; dimensions must divide.
  ForceGrid block_sum(int factor_y, int factor_x) const;

  /// Finite entries; for raw grids also fz >= -tolerance (N).
  void check(double tolerance = 1e-9) const;

  std::string sample_id;
  bool normalized = false;
  std::optional<NormalizationConstants> constants;

 private:
  int width_ = 0;
  int height_ = 0;
  Data data_;
};

/// Divides shear channels by c.shear and fz by c.normal; marks the grid.
ForceGrid normalize(const ForceGrid& g, const NormalizationConstants& c);
/// Exact inverse of normalize.
ForceGrid denormalize(const ForceGrid& g, const NormalizationConstants& c);

/// "HxW" such as "24x32" (rows x columns).
struct Resolution {
  int height = 24;
  int width = 32;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};
Resolution parse_resolution(const std::string& s);
std::string to_string(const Resolution& r);

struct ProjectedFace {
  std::vector<Eigen::Vector2d> polygon;  // pixels
  Vec3 force = Vec3::Zero();
};

/// Projects surface faces (undeformed positions) to pixel polygons. With
/// `subdivide`, each six-node face becomes four triangles through its
/// mid-edge nodes carrying force shares proportional to their 3D areas;
/// otherwise one corner triangle per face.
std::vector<ProjectedFace> project_faces(const Mesh& mesh, const std::vector<SurfaceFace>& faces,
                                         const std::vector<Vec3>& forces, const ProjectionMatrix& p,
                                         bool subdivide = true);

struct BinResult {
  ForceGrid grid;
  Vec3 dropped = Vec3::Zero();  // force falling outside the image
  std::vector<std::string> warnings;
};

/// Splits each polygon's force over the W x H bins of an image of
/// `image_size` = (width, height) pixels by clipped-area fraction.
BinResult bin_forces(const std::vector<ProjectedFace>& faces, int width, int height,
                     const Eigen::Vector2d& image_size);

/// Area of the part of a polygon inside an axis-aligned rectangle.
double clipped_area(const std::vector<Eigen::Vector2d>& polygon, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi);

/// Absolute shoelace area.
double polygon_area(const std::vector<Eigen::Vector2d>& polygon);

struct LabelOptions {
  Resolution resolution;
  Eigen::Vector2d image_size{320.0, 240.0};
  std::string surface = "CONTACT";
  bool subdivide = true;
};

/// Face forces from the solution, negated to the label sign convention,
/// projected and binned.
BinResult make_label(const Mesh& mesh, const Solution& sol, const ProjectionMatrix& p, const LabelOptions& opts = {});

/// Same from raw nodal reactions keyed by node id (e.g. an FRD "FORC" block).
BinResult make_label(const Mesh& mesh, const std::map<int, Vec3>& reactions, const ProjectionMatrix& p,
                     const LabelOptions& opts = {});

/// Binary FGRD: "FGRD", u16 version, u16 W, u16 H, u16 C = 3, then H*W*C
/// little-endian f32 (row-major, channel fastest).
void write_fgrd(std::ostream& out, const ForceGrid& g);
ForceGrid read_fgrd(std::istream& in);

/// Writes `path` and the metadata sidecar `path + ".json"`. `extra` entries
/// are merged into the sidecar.
void save_label(const std::string& path, const ForceGrid& g, const nlohmann::json& extra = nlohmann::json::object());
/// Reads the grid and, when present, its sidecar metadata.
ForceGrid load_label(const std::string& path, nlohmann::json* sidecar = nullptr);

nlohmann::json sidecar_json(const ForceGrid& g);

}  // namespace gelforce
