// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/calibration.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "gelforce/error.hpp"
#include "text.hpp"

namespace gelforce {

std::vector<LoadDepthMeasurement> read_measurements_csv(std::istream& in) {
  std::vector<LoadDepthMeasurement> out;
  std::string line;
  std::size_t no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      header = true;
      std::string h = text::upper(t);
      std::erase(h, ' ');
      if (h == "DEPTH_MM,FORCE_N") continue;
      throw ParseError("expected header 'depth_mm,force_n'", no, 1);
    }
    const auto fields = text::split_fields(line);
    if (fields.size() != 2) throw ParseError("expected two fields 'depth_mm,force_n'", no, 1);
    LoadDepthMeasurement m;
    const auto d = text::parse_double(fields[0].value);
    const auto f = text::parse_double(fields[1].value);
    if (!d) throw ParseError("bad number", no, fields[0].column);
    if (!f) throw ParseError("bad number", no, fields[1].column);
    m.depth = *d;
    m.force = *f;
    if (!(m.depth > 0.0)) throw ParseError("depth must be positive", no, fields[0].column);
    if (!std::isfinite(m.force)) throw ParseError("force must be finite", no, fields[1].column);
    out.push_back(m);
  }
  return out;
}

void write_measurements_csv(std::ostream& out, const std::vector<LoadDepthMeasurement>& m) {
  out << "depth_mm,force_n\n";
  for (const auto& x : m) out << text::format_double(x.depth) << "," << text::format_double(x.force) << "\n";
}

LoadModel::LoadModel(Mesh mesh, IndenterScene scene, double poisson, SolverOptions opts)
    : mesh_(std::move(mesh)), scene_(std::move(scene)), poisson_(poisson), opts_(std::move(opts)) {
  if (!(poisson > -1.0 && poisson < 0.5)) throw ValidationError("Poisson ratio must lie in (-1, 0.5)");
}

double LoadModel::normal_force(double c10, double depth) {
  if (!(c10 > 0.0)) throw ValidationError("C10 must be positive");
  const auto key = std::make_pair(c10, depth);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  IndenterScene s = scene_;
  s.depth = depth;
  const BoundaryConditions bc = tie_contact(mesh_, s);
  SolverOptions o = opts_;
  if (auto w = warm_.find(depth); w != warm_.end()) o.warm_start = w->second;
  ++solves_;
  const Solution sol = solve_static(mesh_, Material::from_poisson(c10, poisson_), bc, o);
  double fz = 0.0;
  for (const auto& [id, u] : bc.prescribed) fz -= sol.reaction(mesh_.node_index(id)).z();
  warm_[depth] = sol.flat_displacement();
  cache_[key] = fz;
  return fz;
}

double loss_j(LoadModel& model, double c10, const std::vector<LoadDepthMeasurement>& meas) {
  if (meas.empty()) throw ValidationError("loss needs at least one measurement");
  double sum = 0.0;
  try {
    for (const auto& m : meas) {
      const double r = model.normal_force(c10, m.depth) - m.force;
      sum += r * r;
    }
  } catch (const SolverError&) {
    return std::numeric_limits<double>::infinity();
  }
  return sum / static_cast<double>(meas.size());
}

std::vector<LoadDepthMeasurement> synthetic_measurements(LoadModel& model, double c10, const std::vector<double>& depths) {
  std::vector<LoadDepthMeasurement> out;
  for (double d : depths) out.push_back({d, model.normal_force(c10, d)});
  return out;
}

CalibrationResult fit_c10(const std::function<double(double)>& objective, const FitOptions& opts) {
  if (!(opts.lo > 0.0 && opts.hi >= opts.lo)) throw ValidationError("calibration bounds need 0 < lo <= hi");
  if (opts.budget < 8) throw ValidationError("calibration budget must allow at least 8 evaluations");
  if (opts.grid_points < 3 || opts.grid_points > opts.budget) {
    throw ValidationError("grid scan needs between 3 and budget points");
  }
  CalibrationResult res;
  res.loss = std::numeric_limits<double>::infinity();
  res.c10 = opts.lo;
  auto eval = [&](double c) {
    const double j = objective(c);
    const double v = std::isnan(j) ? std::numeric_limits<double>::infinity() : j;
    if (v < res.loss || res.trace.empty()) {
      res.c10 = c;
      res.loss = v;
    }
    res.trace.push_back({c, v, res.c10, res.loss});
    return v;
  };

  if (opts.hi - opts.lo <= opts.tolerance) {
    eval(opts.lo);
  } else {
    const int n = opts.grid_points;
    std::vector<double> xs(n), fs(n);
    int best = 0;
    for (int i = 0; i < n; ++i) {
      xs[i] = opts.lo + (opts.hi - opts.lo) * i / (n - 1);
      fs[i] = eval(xs[i]);
      if (fs[i] < fs[best]) best = i;
    }
    double a = xs[std::max(best - 1, 0)], b = xs[std::min(best + 1, n - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = 0.0, f2 = 0.0;
    int left = opts.budget - n;
    if (left >= 2) {
      f1 = eval(x1);
      f2 = eval(x2);
      left -= 2;
      while (left > 0 && b - a > opts.tolerance) {
        if (f1 <= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - g * (b - a);
          f1 = eval(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + g * (b - a);
          f2 = eval(x2);
        }
        --left;
      }
    }
  }
  if (!std::isfinite(res.loss)) throw SolverError("calibration failed: every FEA evaluation diverged");
  return res;
}

CalibrationResult fit_c10(LoadModel& model, const std::vector<LoadDepthMeasurement>& meas, const FitOptions& opts) {
  if (meas.empty()) throw ValidationError("calibration needs at least one measurement");
  return fit_c10([&](double c) { return loss_j(model, c, meas); }, opts);
}

nlohmann::json to_json(const CalibrationResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : r.trace) {
    trace.push_back({{"c10", s.c10},
                     {"loss", std::isfinite(s.loss) ? nlohmann::json(s.loss) : nlohmann::json(nullptr)},
                     {"best_c10", s.best_c10},
                     {"best_loss", std::isfinite(s.best_loss) ? nlohmann::json(s.best_loss) : nlohmann::json(nullptr)}});
  }
  return {{"c10", r.c10}, {"loss", r.loss}, {"evaluations", r.trace.size()}, {"trace", trace}};
}

}  // namespace gelforce
