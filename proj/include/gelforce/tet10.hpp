// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Ten-node quadratic tetrahedron (Abaqus/CalculiX C3D10 numbering).
//
// Corners 0..3 sit at the barycentric vertices L1..L4 of the reference
// tetrahedron {xi, eta, zeta >= 0, xi + eta + zeta <= 1}; mid-edge nodes 4..9
// sit on edges 0-1, 1-2, 2-0, 0-3, 1-3, 2-3.

#pragma once

#include <array>

#include <Eigen/Core>

namespace gelforce::tet10 {

inline constexpr int kNodes = 10;
inline constexpr int kCorners = 4;

/// Corner pair spanned by each mid-edge node (node 4 + i).
inline constexpr std::array<std::array<int, 2>, 6> kEdges = {{
    {0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3},
}};

/// Face node lists (S1..S4): three corners, then the mid-edge nodes of
/// edges c0-c1, c1-c2, c2-c0.
inline constexpr std::array<std::array<int, 6>, 4> kFaces = {{
    {0, 1, 2, 4, 5, 6},
    {0, 3, 1, 7, 8, 4},
    {1, 3, 2, 8, 9, 5},
    {2, 3, 0, 9, 7, 6},
}};

template <typename Scalar>
using Natural = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
Eigen::Matrix<Scalar, kNodes, 1> shape(const Natural<Scalar>& xi) {
  const Scalar l[4] = {Scalar(1) - xi(0) - xi(1) - xi(2), xi(0), xi(1), xi(2)};
  Eigen::Matrix<Scalar, kNodes, 1> n;
  for (int c = 0; c < 4; ++c) n(c) = l[c] * (Scalar(2) * l[c] - Scalar(1));
  for (int e = 0; e < 6; ++e) n(4 + e) = Scalar(4) * l[kEdges[e][0]] * l[kEdges[e][1]];
  return n;
}

/// dN_a/dxi_k as a 10x3 matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, kNodes, 3> shape_gradient(const Natural<Scalar>& xi) {
  const Scalar l[4] = {Scalar(1) - xi(0) - xi(1) - xi(2), xi(0), xi(1), xi(2)};
  Eigen::Matrix<Scalar, 4, 3> dl;
  dl << -1, -1, -1,  //
      1, 0, 0,       //
      0, 1, 0,       //
      0, 0, 1;
  Eigen::Matrix<Scalar, kNodes, 3> g;
  for (int c = 0; c < 4; ++c) g.row(c) = (Scalar(4) * l[c] - Scalar(1)) * dl.row(c);
  for (int e = 0; e < 6; ++e) {
    const int i = kEdges[e][0], j = kEdges[e][1];
    g.row(4 + e) = Scalar(4) * (l[j] * dl.row(i) + l[i] * dl.row(j));
  }
  return g;
}

struct QuadraturePoint {
  Eigen::Vector3d xi;
  double weight;  // includes the reference volume 1/6
};

/// Symmetric four-point Gauss rule, exact for quadratic integrands.
inline const std::array<QuadraturePoint, 4>& gauss4() {
  static const std::array<QuadraturePoint, 4> rule = [] {
    constexpr double a = 0.5854101966249685;
    constexpr double b = 0.1381966011250105;
    constexpr double w = 1.0 / 24.0;
    return std::array<QuadraturePoint, 4>{{
        {Eigen::Vector3d(b, b, b), w},
        {Eigen::Vector3d(a, b, b), w},
        {Eigen::Vector3d(b, a, b), w},
        {Eigen::Vector3d(b, b, a), w},
    }};
  }();
  return rule;
}

}  // namespace gelforce::tet10
