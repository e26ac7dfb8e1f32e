// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gelforce/calibration.hpp"
#include "gelforce/error.hpp"

using namespace gelforce;

namespace {

LoadModel coarse_model() { return LoadModel(meshgen_box(BoxSpec{{32, 24, 5}, {8, 6, 2}, 2.0}), IndenterScene{}); }

const std::vector<double> kDepths = {0.5, 1.0, 1.5, 2.0};

}  // namespace

TEST_CASE("self-consistent data has zero loss at the generating constant") {
  LoadModel model = coarse_model();
  const auto meas = synthetic_measurements(model, kGelC10, kDepths);
  REQUIRE(meas.size() == 4);
  for (std::size_t i = 1; i < meas.size(); ++i) CHECK(meas[i].force > meas[i - 1].force);
  CHECK(loss_j(model, kGelC10, meas) == 0.0);
  CHECK(loss_j(model, 0.08, meas) > 0.0);
  // Cached: no new solves for repeated candidates.
  const int before = model.solves();
  loss_j(model, kGelC10, meas);
  CHECK(model.solves() == before);
}

TEST_CASE("loss is unimodal on a grid scan") {
  LoadModel model = coarse_model();
  const auto meas = synthetic_measurements(model, kGelC10, kDepths);
  std::vector<double> j;
  for (int i = 0; i < 25; ++i) j.push_back(loss_j(model, 0.03 + 0.005 * i, meas));
  int minima = 0;
  for (int i = 0; i < 25; ++i) {
    const bool left = i == 0 || j[i] < j[i - 1];
    const bool right = i == 24 || j[i] < j[i + 1];
    if (left && right) ++minima;
    CHECK(std::isfinite(j[i]));
  }
  CHECK(minima == 1);
}

TEST_CASE("scaling measured forces scales the loss quadratically") {
  LoadModel model = coarse_model();
  const auto meas = synthetic_measurements(model, 0.06, {0.5, 1.5});
  auto scaled = meas;
  const double s = 1.7;
  for (auto& m : scaled) m.force *= s;
  for (double c : {0.04, 0.09}) {
    const double a = loss_j(model, c, meas);
    const double b = loss_j(model, s * c, scaled);
    CHECK(b == doctest::Approx(s * s * a).epsilon(1e-6));
  }
}

TEST_CASE("recovery of the generating constant") {
  LoadModel model = coarse_model();
  const auto meas = synthetic_measurements(model, kGelC10, kDepths);
  const CalibrationResult r = fit_c10(model, meas);
  CHECK(std::abs(r.c10 - kGelC10) < 1e-3);
  CHECK(r.trace.size() <= 24);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].best_loss <= r.trace[i - 1].best_loss);
  for (const auto& s : r.trace) CHECK(r.loss <= s.loss);
  const nlohmann::json j = to_json(r);
  CHECK(j["evaluations"] == r.trace.size());
}

TEST_CASE("optimizer on analytic objectives") {
  int calls = 0;
  auto quad = [&](double c) {
    ++calls;
    return (c - 0.0812) * (c - 0.0812);
  };
  const CalibrationResult r = fit_c10(quad);
  CHECK(calls == 24);
  CHECK(std::abs(r.c10 - 0.0812) < 1e-4);
  // Deterministic.
  const CalibrationResult again = fit_c10(quad);
  CHECK(again.c10 == r.c10);
  // Minimum at the boundary.
  const CalibrationResult edge = fit_c10([](double c) { return c; });
  CHECK(edge.c10 == 0.03);
  // Degenerate interval evaluates lo once.
  calls = 0;
  FitOptions tight;
  tight.lo = 0.05;
  tight.hi = 0.05 + 1e-9;
  const CalibrationResult d = fit_c10(quad, tight);
  CHECK(calls == 1);
  CHECK(d.c10 == 0.05);
  // Failed evaluations are skipped, total failure is an error.
  const CalibrationResult partial =
      fit_c10([](double c) { return c < 0.1 ? std::numeric_limits<double>::infinity() : c; });
  CHECK(partial.c10 == doctest::Approx(0.1));
  CHECK_THROWS_AS(fit_c10([](double) { return std::numeric_limits<double>::infinity(); }), SolverError);
  FitOptions small;
  small.budget = 7;
  CHECK_THROWS_AS(fit_c10(quad, small), ValidationError);
  FitOptions inverted;
  inverted.lo = 0.2;
  CHECK_THROWS_AS(fit_c10(quad, inverted), ValidationError);
}

TEST_CASE("measurement CSV") {
  std::istringstream in("# sphere, 15 mm\ndepth_mm,force_n\n0.5,1.25\r\n1.0, 4.5\n\n");
  const auto m = read_measurements_csv(in);
  REQUIRE(m.size() == 2);
  CHECK(m[1].depth == 1.0);
  CHECK(m[1].force == 4.5);
  std::ostringstream out;
  write_measurements_csv(out, m);
  std::istringstream back(out.str());
  CHECK(read_measurements_csv(back).size() == 2);

  std::istringstream bad("depth_mm,force_n\n0.5,x\n");
  try {
    read_measurements_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 5);
  }
  std::istringstream no_header("0.5,1.0\n");
  CHECK_THROWS_AS(read_measurements_csv(no_header), ParseError);
  std::istringstream negative("depth_mm,force_n\n-0.5,1.0\n");
  CHECK_THROWS_AS(read_measurements_csv(negative), ParseError);
}
