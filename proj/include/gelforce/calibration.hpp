// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Fitting C10 to sphere load-depth measurements with the FEA in the loop.

#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gelforce/fea.hpp"

namespace gelforce {

struct LoadDepthMeasurement {
  double depth = 0.0;  // mm
  double force = 0.0;  // N, normal force on the indenter
};

/// CSV with header `depth_mm,force_n`. Throws ParseError with the line.
std::vector<LoadDepthMeasurement> read_measurements_csv(std::istream& in);
void write_measurements_csv(std::ostream& out, const std::vector<LoadDepthMeasurement>& m);

/// Normal indenter force as a function of (C10, depth). D1 follows C10 so
/// that the small-strain Poisson ratio stays fixed. Results are cached per
/// (C10, depth), and every solve is warm-started from the last converged
/// field at the same depth.
class LoadModel {
 public:
  LoadModel(Mesh mesh, IndenterScene scene, double poisson = kGelPoisson, SolverOptions opts = {});

  /// Throws SolverError when the FEA does not converge.
  double normal_force(double c10, double depth);

  int solves() const { return solves_; }
  const Mesh& mesh() const { return mesh_; }

 private:
  Mesh mesh_;
  IndenterScene scene_;
  double poisson_;
  SolverOptions opts_;
  std::map<std::pair<double, double>, double> cache_;
  std::map<double, Eigen::VectorXd> warm_;
  int solves_ = 0;
};

/// Mean squared force error over the measurements. Non-convergence of any
/// solve yields +infinity.
double loss_j(LoadModel& model, double c10, const std::vector<LoadDepthMeasurement>& meas);

/// Forces of the model at `c10` for each depth.
std::vector<LoadDepthMeasurement> synthetic_measurements(LoadModel& model, double c10, const std::vector<double>& depths);

struct CalibrationStep {
  double c10 = 0.0;
  double loss = 0.0;
  double best_c10 = 0.0;
  double best_loss = 0.0;
};

struct CalibrationResult {
  double c10 = 0.0;
  double loss = 0.0;
  std::vector<CalibrationStep> trace;
};

struct FitOptions {
  double lo = 0.03;
  double hi = 0.15;
  int budget = 24;       // objective evaluations, at least 8
  int grid_points = 7;   // coarse scan before golden-section refinement
  double tolerance = 1e-6;  // stop once the bracket is narrower
};

/// Coarse grid scan over [lo, hi], then golden-section search inside the
/// bracket around the best grid point. Returns the best evaluated
/// candidate. An interval narrower than the tolerance evaluates `lo` once.
/// Throws ValidationError for bad options and SolverError when every
/// evaluation failed.
CalibrationResult fit_c10(const std::function<double(double)>& objective, const FitOptions& opts = {});
CalibrationResult fit_c10(LoadModel& model, const std::vector<LoadDepthMeasurement>& meas, const FitOptions& opts = {});

nlohmann::json to_json(const CalibrationResult& r);

}  // namespace gelforce
