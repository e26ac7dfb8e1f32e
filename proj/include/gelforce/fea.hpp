// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Static, geometrically nonlinear finite element analysis of the gel slab.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "gelforce/indenter.hpp"
#include "gelforce/material.hpp"
#include "gelforce/mesh.hpp"

namespace gelforce {

/// Single displacement component (dof 0, 1, 2 = x, y, z) held at `value`.
struct DofConstraint {
  int node_id = 0;
  int dof = 0;
  double value = 0.0;
};

/// Essential boundary conditions, keyed by external node ids.
struct BoundaryConditions {
  std::vector<int> fixed_nodes;            // all components zero
  std::map<int, Vec3> prescribed;          // all components prescribed (mm)
  std::vector<DofConstraint> components;   // individual components

  /// Throws ValidationError for unknown nodes, overlapping sets or a
  /// component constrained twice.
  void check(const Mesh& mesh) const;
};

struct SolverOptions {
  int increments = 5;
  int max_iterations = 20;
  double tol_abs = 1e-8;   // N
  double tol_rel = 1e-10;  // relative to the load of the increment
  int max_cutbacks = 8;    // load step halvings before giving up
  int threads = 1;
  /// Start each increment from a tangent-based extrapolation of the last
  /// converged state instead of only moving the constrained values.
  bool linear_predictor = true;
  /// Optional starting displacement (3 per node, internal node order). When
  /// given, the full load is attempted in one increment first.
  std::optional<Eigen::VectorXd> warm_start;
};

/// Residual history of one converged (or abandoned) load increment.
struct IncrementTrace {
  double load_from = 0.0;
  double load_to = 0.0;
  std::vector<double> residuals;  // free-dof residual 2-norm per iteration
  bool converged = false;
};

struct Solution {
  Eigen::Matrix3Xd displacement;    // column per internal node index (mm)
  std::vector<int> constrained;     // internal node indices with any constrained component
  std::vector<Vec3> reactions;      // parallel to `constrained` (N)
  std::vector<IncrementTrace> trace;

  /// Reaction at an internal node index, zero for unconstrained nodes.
  Vec3 reaction(int node) const;
  Vec3 total_reaction() const;
  Eigen::VectorXd flat_displacement() const;
};

/// Global internal force vector (3 per node) for a displacement field.
/// Throws ValidationError if any quadrature point is inverted.
Eigen::VectorXd internal_force(const Mesh& mesh, const Material& mat, const Eigen::VectorXd& u);

/// Consistent tangent dF_int/du (3n x 3n), symmetrized.
Eigen::SparseMatrix<double> tangent_stiffness(const Mesh& mesh, const Material& mat, const Eigen::VectorXd& u);

/// Newton-Raphson with incremental loading. Element inversion in a trial
/// state shortens the Newton step; failure of an increment halves the load
/// step. Throws SolverError when the step can no longer be halved.
Solution solve_static(const Mesh& mesh, const Material& mat, const BoundaryConditions& bc,
                      const SolverOptions& opts = {});

struct ContactOptions {
  std::string surface = "CONTACT";
  std::string fixed_set = "FIXED";
  double tolerance = 1e-9;  // mm; depths below this are treated as no contact
};

/// Ties the top-surface nodes covered by the indenter to it: each such node
/// is pushed down onto the indenter surface and then moved by the rigid
/// tangential offset. The bottom node set is pinned.
BoundaryConditions tie_contact(const Mesh& mesh, const IndenterScene& scene, const ContactOptions& opts = {});

/// Force carried by each face of a surface set (same order as the set):
/// every node's reaction is split equally among the set faces that contain
/// it. Raw reaction sign convention (force applied to the gel).
std::vector<Vec3> surface_element_forces(const Mesh& mesh, const Solution& sol,
                                         const std::string& surface = "CONTACT");

/// JSON: {"nodes": [{"id", "u": [3], "rf": [3]?}...], "trace": [...]}.
nlohmann::json solution_to_json(const Mesh& mesh, const Solution& sol);
Solution solution_from_json(const Mesh& mesh, const nlohmann::json& j);

}  // namespace gelforce
