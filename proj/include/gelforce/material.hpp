// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Compressible Neo-Hookean solid with the strain energy density
//
//   U = C10 (Ibar1 - 3) + (J - 1)^2 / D1,   Ibar1 = J^(-2/3) tr(F^T F).
//
// Stresses are first Piola-Kirchhoff, P = dU/dF. Units are N and mm.

#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "gelforce/error.hpp"

namespace gelforce {

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// dP/dF with P and F flattened row-major (index 3 i + J).
template <typename Scalar>
using Tangent9 = Eigen::Matrix<Scalar, 9, 9>;

template <typename Scalar>
struct NeoHookean {
  Scalar c10;  // N/mm^2
  Scalar d1;   // mm^2/N

  Scalar shear_modulus() const { return Scalar(2) * c10; }
  Scalar bulk_modulus() const { return Scalar(2) / d1; }

  /// D1 that yields Poisson ratio `nu` at small strain for the given C10.
  static Scalar d1_from_poisson(Scalar c10, Scalar nu) {
    const Scalar mu = Scalar(2) * c10;
    const Scalar kappa = Scalar(2) * mu * (Scalar(1) + nu) / (Scalar(3) * (Scalar(1) - Scalar(2) * nu));
    return Scalar(2) / kappa;
  }

  static NeoHookean from_poisson(Scalar c10, Scalar nu) { return {c10, d1_from_poisson(c10, nu)}; }

  void check() const {
    if (!(c10 > Scalar(0)) || !(d1 > Scalar(0))) throw ValidationError("Neo-Hookean constants must be positive");
  }
};

using Material = NeoHookean<double>;

/// C10 for the gel (shear modulus 0.145 N/mm^2).
inline constexpr double kGelC10 = 0.0725;
/// Poisson ratio used to pick D1 when none is given.
inline constexpr double kGelPoisson = 0.495;

inline Material default_gel_material() { return Material::from_poisson(kGelC10, kGelPoisson); }

namespace detail {

template <typename Scalar>
Scalar checked_det(const Mat3<Scalar>& f) {
  const Scalar j = f.determinant();
  if (!(j > Scalar(0))) throw ValidationError("deformation gradient has non-positive determinant");
  return j;
}

}  // namespace detail

template <typename Scalar>
Scalar strain_energy(const NeoHookean<Scalar>& mat, const Mat3<Scalar>& f) {
  using std::pow;
  const Scalar j = detail::checked_det(f);
  const Scalar ibar1 = pow(j, Scalar(-2) / Scalar(3)) * f.squaredNorm();
  return mat.c10 * (ibar1 - Scalar(3)) + (j - Scalar(1)) * (j - Scalar(1)) / mat.d1;
}

template <typename Scalar>
Mat3<Scalar> pk1_stress(const NeoHookean<Scalar>& mat, const Mat3<Scalar>& f) {
  using std::pow;
  const Scalar j = detail::checked_det(f);
  const Mat3<Scalar> g = f.inverse().transpose();
  const Scalar a = pow(j, Scalar(-2) / Scalar(3));
  const Scalar i1 = f.squaredNorm();
  return mat.c10 * a * (Scalar(2) * f - Scalar(2) / Scalar(3) * i1 * g) +
         Scalar(2) / mat.d1 * (j - Scalar(1)) * j * g;
}

/// Directional derivative A : dF of the first Piola-Kirchhoff stress.
template <typename Scalar>
Mat3<Scalar> material_tangent(const NeoHookean<Scalar>& mat, const Mat3<Scalar>& f, const Mat3<Scalar>& df) {
  using std::pow;
  const Scalar j = detail::checked_det(f);
  const Mat3<Scalar> g = f.inverse().transpose();
  const Scalar a = pow(j, Scalar(-2) / Scalar(3));
  const Scalar i1 = f.squaredNorm();
  const Scalar t = (g.array() * df.array()).sum();  // tr(F^-1 dF)
  const Scalar fdf = (f.array() * df.array()).sum();
  const Mat3<Scalar> gdg = g * df.transpose() * g;
  const Scalar third = Scalar(1) / Scalar(3);
  const Mat3<Scalar> iso = -Scalar(2) * third * a * t * (Scalar(2) * f - Scalar(2) * third * i1 * g) +
                           a * (Scalar(2) * df - Scalar(4) * third * fdf * g + Scalar(2) * third * i1 * gdg);
  const Mat3<Scalar> vol = (Scalar(2) * j - Scalar(1)) * j * t * g - (j * j - j) * gdg;
  return mat.c10 * iso + Scalar(2) / mat.d1 * vol;
}

/// Full dP/dF, symmetrized (the exact tangent is symmetric).
template <typename Scalar>
Tangent9<Scalar> tangent_matrix(const NeoHookean<Scalar>& mat, const Mat3<Scalar>& f) {
  using std::pow;
  const Scalar j = detail::checked_det(f);
  const Mat3<Scalar> g = f.inverse().transpose();
  const Scalar a = pow(j, Scalar(-2) / Scalar(3));
  const Scalar i1 = f.squaredNorm();
  const Scalar third = Scalar(1) / Scalar(3);
  const Scalar kv = Scalar(2) / mat.d1;

  Eigen::Matrix<Scalar, 9, 1> fv, gv;
  for (int i = 0; i < 3; ++i) {
    for (int jj = 0; jj < 3; ++jj) {
      fv(3 * i + jj) = f(i, jj);
      gv(3 * i + jj) = g(i, jj);
    }
  }
  Tangent9<Scalar> m = mat.c10 * a *
                           (Scalar(4) / Scalar(9) * i1 * gv * gv.transpose() -
                            Scalar(4) * third * (gv * fv.transpose() + fv * gv.transpose())) +
                       kv * (Scalar(2) * j - Scalar(1)) * j * gv * gv.transpose();
  const Scalar cross = mat.c10 * a * Scalar(2) * third * i1 - kv * (j * j - j);
  // delta_ik delta_JL and the G_iL G_kJ cross term.
  for (int i = 0; i < 3; ++i) {
    for (int jj = 0; jj < 3; ++jj) {
      m(3 * i + jj, 3 * i + jj) += mat.c10 * a * Scalar(2);
      for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) m(3 * i + jj, 3 * k + l) += cross * g(i, l) * g(k, jj);
      }
    }
  }
  return Scalar(0.5) * (m + m.transpose());
}

/// Cauchy stress sigma = P F^T / J.
template <typename Scalar>
Mat3<Scalar> cauchy_stress(const NeoHookean<Scalar>& mat, const Mat3<Scalar>& f) {
  return pk1_stress(mat, f) * f.transpose() / f.determinant();
}

}  // namespace gelforce
