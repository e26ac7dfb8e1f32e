// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/fea.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#ifdef GELFORCE_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include "gelforce/error.hpp"
#include "gelforce/tet10.hpp"

namespace gelforce {

void BoundaryConditions::check(const Mesh& mesh) const {
  std::set<std::pair<int, int>> seen;
  auto claim = [&](int id, int dof) {
    if (!mesh.has_node(id)) throw ValidationError("boundary condition on missing node " + std::to_string(id));
    if (dof < 0 || dof > 2) throw ValidationError("dof must be 0, 1 or 2");
    if (!seen.insert({id, dof}).second) {
      throw ValidationError("node " + std::to_string(id) + " dof " + std::to_string(dof) + " constrained twice");
    }
  };
  for (int id : fixed_nodes) {
    for (int d = 0; d < 3; ++d) claim(id, d);
  }
  for (const auto& [id, u] : prescribed) {
    if (!u.allFinite()) throw ValidationError("non-finite prescribed displacement");
    for (int d = 0; d < 3; ++d) claim(id, d);
  }
  for (const auto& c : components) {
    if (!std::isfinite(c.value)) throw ValidationError("non-finite prescribed displacement");
    claim(c.node_id, c.dof);
  }
}

Vec3 Solution::reaction(int node) const {
  auto it = std::lower_bound(constrained.begin(), constrained.end(), node);
  if (it == constrained.end() || *it != node) return Vec3::Zero();
  return reactions[it - constrained.begin()];
}

Vec3 Solution::total_reaction() const {
  Vec3 s = Vec3::Zero();
  for (const Vec3& r : reactions) s += r;
  return s;
}

Eigen::VectorXd Solution::flat_displacement() const {
  return Eigen::Map<const Eigen::VectorXd>(displacement.data(), displacement.size());
}

namespace {

using Mat10x3 = Eigen::Matrix<double, 10, 3>;
using Vec30 = Eigen::Matrix<double, 30, 1>;
using Mat30 = Eigen::Matrix<double, 30, 30>;

struct ElementGeometry {
  std::array<Mat10x3, 4> dndx;
  std::array<double, 4> weight;  // quadrature weight times reference Jacobian
};

std::vector<ElementGeometry> precompute_geometry(const Mesh& mesh) {
  std::vector<ElementGeometry> geo(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    Eigen::Matrix<double, 3, 10> x;
    for (int a = 0; a < 10; ++a) x.col(a) = mesh.node(mesh.element(e)[a]);
    const auto& rule = tet10::gauss4();
    for (int q = 0; q < 4; ++q) {
      const Mat10x3 dn = tet10::shape_gradient<double>(rule[q].xi);
      const Eigen::Matrix3d jac = x * dn;
      const double det = jac.determinant();
      if (!(det > 0.0)) throw ValidationError("element " + std::to_string(mesh.element_id(e)) + " is inverted");
      geo[e].dndx[q] = dn * jac.inverse();
      geo[e].weight[q] = rule[q].weight * det;
    }
  }
  return geo;
}

// Internal force and (optionally) tangent of one element. Returns false if a
// quadrature point is inverted.
bool element_kernel(const ElementGeometry& g, const Material& mat, const Eigen::Matrix<double, 3, 10>& ue,
                    Vec30& f, Mat30* k) {
  f.setZero();
  if (k) k->setZero();
  for (int q = 0; q < 4; ++q) {
    const Mat10x3& dn = g.dndx[q];
    const Eigen::Matrix3d fdef = Eigen::Matrix3d::Identity() + ue * dn;
    if (!(fdef.determinant() > 0.0)) return false;
    const Eigen::Matrix3d p = pk1_stress(mat, fdef);
    const Mat10x3 fa = g.weight[q] * dn * p.transpose();
    for (int a = 0; a < 10; ++a) f.segment<3>(3 * a) += fa.row(a).transpose();
    if (!k) continue;
    const Tangent9<double> tan = tangent_matrix(mat, fdef);
    for (int i = 0; i < 3; ++i) {
      for (int kk = 0; kk < 3; ++kk) {
        const Eigen::Matrix<double, 10, 10> blk = g.weight[q] * dn * tan.block<3, 3>(3 * i, 3 * kk) * dn.transpose();
        for (int a = 0; a < 10; ++a) {
          for (int b = 0; b < 10; ++b) (*k)(3 * a + i, 3 * b + kk) += blk(a, b);
        }
      }
    }
  }
  return true;
}

Eigen::Matrix<double, 3, 10> gather(const Mesh& mesh, int e, const Eigen::VectorXd& u) {
  Eigen::Matrix<double, 3, 10> ue;
  const Element& el = mesh.element(e);
  for (int a = 0; a < 10; ++a) ue.col(a) = u.segment<3>(3 * el[a]);
  return ue;
}

// Free/constrained partition of the global dofs.
struct DofMap {
  std::vector<int> eq;           // >= 0: free equation; < 0: -(constrained index + 1)
  std::vector<int> constrained;  // global dof per constrained index
  Eigen::VectorXd target;        // full-load value per constrained index
  int num_free = 0;

  DofMap(const Mesh& mesh, const BoundaryConditions& bc) {
    bc.check(mesh);
    const int n = 3 * mesh.num_nodes();
    std::vector<double> value(n, 0.0);
    std::vector<char> fixed(n, 0);
    for (int id : bc.fixed_nodes) {
      const int node = mesh.node_index(id);
      for (int d = 0; d < 3; ++d) fixed[3 * node + d] = 1;
    }
    for (const auto& [id, disp] : bc.prescribed) {
      const int node = mesh.node_index(id);
      for (int d = 0; d < 3; ++d) {
        fixed[3 * node + d] = 1;
        value[3 * node + d] = disp(d);
      }
    }
    for (const auto& c : bc.components) {
      const int g = 3 * mesh.node_index(c.node_id) + c.dof;
      fixed[g] = 1;
      value[g] = c.value;
    }
    eq.assign(n, 0);
    std::vector<double> t;
    for (int g = 0; g < n; ++g) {
      if (fixed[g]) {
        eq[g] = -static_cast<int>(constrained.size()) - 1;
        constrained.push_back(g);
        t.push_back(value[g]);
      } else {
        eq[g] = num_free++;
      }
    }
    target = Eigen::Map<Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
  }

  int num_constrained() const { return static_cast<int>(constrained.size()); }
};

// Assembled free-free tangent (lower triangle), free-constrained coupling and
// the internal force vector, with the sparsity pattern fixed up front.
class System {
 public:
  System(const Mesh& mesh, const Material& mat, const DofMap& dofs, int threads)
      : mesh_(mesh), mat_(mat), dofs_(dofs), geo_(precompute_geometry(mesh)), threads_(std::max(1, threads)) {
    build_pattern();
  }

  // Returns false if any element is inverted at `u`.
  bool evaluate(const Eigen::VectorXd& u, bool with_tangent) {
    fint_.setZero(3 * mesh_.num_nodes());
    if (with_tangent) {
      std::fill(kff_.valuePtr(), kff_.valuePtr() + kff_.nonZeros(), 0.0);
      std::fill(kfc_.valuePtr(), kfc_.valuePtr() + kfc_.nonZeros(), 0.0);
    }
    const int ne = mesh_.num_elements();
    if (threads_ == 1) {
      Vec30 f;
      Mat30 k;
      for (int e = 0; e < ne; ++e) {
        if (!element_kernel(geo_[e], mat_, gather(mesh_, e, u), f, with_tangent ? &k : nullptr)) return false;
        scatter(e, f, with_tangent ? &k : nullptr);
      }
      return true;
    }
    // Element work in parallel chunks; scattering stays sequential so the
    // accumulation order (and result) does not depend on the thread count.
    constexpr int kChunk = 512;
    std::vector<Vec30> fs(kChunk);
    std::vector<Mat30> ks(with_tangent ? kChunk : 0);
    std::vector<char> ok(kChunk);
    for (int begin = 0; begin < ne; begin += kChunk) {
      const int count = std::min(kChunk, ne - begin);
      std::vector<std::thread> pool;
      for (int t = 0; t < threads_; ++t) {
        pool.emplace_back([&, t] {
          for (int i = t; i < count; i += threads_) {
            ok[i] = element_kernel(geo_[begin + i], mat_, gather(mesh_, begin + i, u), fs[i],
                                   with_tangent ? &ks[i] : nullptr);
          }
        });
      }
      for (auto& th : pool) th.join();
      for (int i = 0; i < count; ++i) {
        if (!ok[i]) return false;
        scatter(begin + i, fs[i], with_tangent ? &ks[i] : nullptr);
      }
    }
    return true;
  }

  const Eigen::VectorXd& fint() const { return fint_; }
  const Eigen::SparseMatrix<double>& kff() const { return kff_; }
  const Eigen::SparseMatrix<double>& kfc() const { return kfc_; }

  Eigen::VectorXd free_part(const Eigen::VectorXd& full) const {
    Eigen::VectorXd r(dofs_.num_free);
    for (int g = 0; g < static_cast<int>(dofs_.eq.size()); ++g) {
      if (dofs_.eq[g] >= 0) r(dofs_.eq[g]) = full(g);
    }
    return r;
  }

 private:
  static constexpr int kSkip = std::numeric_limits<int>::min();

  void build_pattern() {
    const int ne = mesh_.num_elements();
    std::vector<Eigen::Triplet<double>> tff, tfc;
    auto dof = [&](int e, int l) { return 3 * mesh_.element(e)[l / 3] + l % 3; };
    for (int e = 0; e < ne; ++e) {
      for (int r = 0; r < 30; ++r) {
        const int er = dofs_.eq[dof(e, r)];
        if (er < 0) continue;
        for (int c = 0; c < 30; ++c) {
          const int ec = dofs_.eq[dof(e, c)];
          if (ec >= 0 && er >= ec) tff.emplace_back(er, ec, 0.0);
          if (ec < 0) tfc.emplace_back(er, -ec - 1, 0.0);
        }
      }
    }
    kff_.resize(dofs_.num_free, dofs_.num_free);
    kff_.setFromTriplets(tff.begin(), tff.end());
    kff_.makeCompressed();
    kfc_.resize(dofs_.num_free, dofs_.num_constrained());
    kfc_.setFromTriplets(tfc.begin(), tfc.end());
    kfc_.makeCompressed();

    auto find = [](const Eigen::SparseMatrix<double>& m, int row, int col) {
      const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[col];
      const int* end = m.innerIndexPtr() + m.outerIndexPtr()[col + 1];
      return static_cast<int>(std::lower_bound(begin, end, row) - m.innerIndexPtr());
    };
    slots_.assign(static_cast<std::size_t>(ne) * 900, kSkip);
    for (int e = 0; e < ne; ++e) {
      for (int r = 0; r < 30; ++r) {
        const int er = dofs_.eq[dof(e, r)];
        if (er < 0) continue;
        for (int c = 0; c < 30; ++c) {
          const int ec = dofs_.eq[dof(e, c)];
          int& slot = slots_[static_cast<std::size_t>(e) * 900 + r * 30 + c];
          if (ec >= 0 && er >= ec) slot = find(kff_, er, ec);
          if (ec < 0) slot = -1 - find(kfc_, er, -ec - 1);
        }
      }
    }
  }

  void scatter(int e, const Vec30& f, const Mat30* k) {
    const Element& el = mesh_.element(e);
    for (int a = 0; a < 10; ++a) fint_.segment<3>(3 * el[a]) += f.segment<3>(3 * a);
    if (!k) return;
    const int* slot = &slots_[static_cast<std::size_t>(e) * 900];
    double* vff = kff_.valuePtr();
    double* vfc = kfc_.valuePtr();
    for (int c = 0; c < 30; ++c) {
      for (int r = 0; r < 30; ++r) {
        const int s = slot[r * 30 + c];
        if (s == kSkip) continue;
        // The element tangent is symmetric; use its average to absorb round-off.
        const double v = 0.5 * ((*k)(r, c) + (*k)(c, r));
        if (s >= 0) {
          vff[s] += v;
        } else {
          vfc[-1 - s] += v;
        }
      }
    }
  }

  const Mesh& mesh_;
  const Material& mat_;
  const DofMap& dofs_;
  std::vector<ElementGeometry> geo_;
  int threads_;
  Eigen::VectorXd fint_;
  Eigen::SparseMatrix<double> kff_;
  Eigen::SparseMatrix<double> kfc_;
  std::vector<int> slots_;
};

// Sparse symmetric factorization of the lower-triangle free-free tangent.
class LinearSolver {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

#ifdef GELFORCE_HAVE_CHOLMOD
  // Indefinite tangents are expected occasionally and handled below.
  LinearSolver() { llt_.cholmod().print = 0; }
#endif

  void analyze(const Matrix& k) {
#ifdef GELFORCE_HAVE_CHOLMOD
    llt_.analyzePattern(k);
#else
    ldlt_.analyzePattern(k);
#endif
    analyzed_ = true;
  }

  bool factorize(const Matrix& k) {
#ifdef GELFORCE_HAVE_CHOLMOD
    llt_.factorize(k);
    use_ldlt_ = llt_.info() != Eigen::Success;
    if (!use_ldlt_) return true;
    // Not positive definite; the indefinite path is slower but still exact.
    ldlt_.compute(k);
#else
    ldlt_.factorize(k);
#endif
    return ldlt_.info() == Eigen::Success;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
#ifdef GELFORCE_HAVE_CHOLMOD
    if (!use_ldlt_) return llt_.solve(rhs);
#endif
    return ldlt_.solve(rhs);
  }

  bool analyzed() const { return analyzed_; }

 private:
  bool analyzed_ = false;
#ifdef GELFORCE_HAVE_CHOLMOD
  Eigen::CholmodSupernodalLLT<Matrix, Eigen::Lower> llt_;
  bool use_ldlt_ = false;
#endif
  Eigen::SimplicialLDLT<Matrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

class NewtonSolver {
 public:
  NewtonSolver(const Mesh& mesh, const Material& mat, const BoundaryConditions& bc, const SolverOptions& opts)
      : mesh_(mesh), opts_(opts), dofs_(mesh, bc), system_(mesh, mat, dofs_, opts.threads) {
    if (opts.increments < 1) throw ValidationError("at least one load increment is required");
    if (dofs_.num_free > 0) solver_.analyze(system_.kff());
  }

  Solution run() {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3 * mesh_.num_nodes());
    bool done = false;
    if (opts_.warm_start) {
      if (opts_.warm_start->size() != u.size()) throw ValidationError("warm start has the wrong size");
      Eigen::VectorXd trial = *opts_.warm_start;
      set_constrained(trial, 0.0);
      if (increment(trial, 0.0, 1.0, /*from_converged=*/false)) {
        u = trial;
        done = true;
      }
    }
    double load = 0.0;
    double step = 1.0 / opts_.increments;
    int cutbacks = 0;
    while (!done && load < 1.0) {
      const double to = 1.0 - load <= step * (1.0 + 1e-12) ? 1.0 : load + step;
      Eigen::VectorXd trial = u;
      if (increment(trial, load, to, true)) {
        u = trial;
        load = to;
        continue;
      }
      if (++cutbacks > opts_.max_cutbacks) {
        throw SolverError("Newton failed to converge: load step underflow at load factor " + std::to_string(load));
      }
      step *= 0.5;
    }
    return finish(u);
  }

 private:
  void set_constrained(Eigen::VectorXd& u, double load) const {
    for (int c = 0; c < dofs_.num_constrained(); ++c) u(dofs_.constrained[c]) = load * dofs_.target(c);
  }

  void add_free(Eigen::VectorXd& u, const Eigen::VectorXd& du, double alpha) const {
    for (int g = 0; g < static_cast<int>(dofs_.eq.size()); ++g) {
      if (dofs_.eq[g] >= 0) u(g) += alpha * du(dofs_.eq[g]);
    }
  }

  bool factor_and_solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x) {
    if (!solver_.factorize(system_.kff())) return false;
    x = solver_.solve(rhs);
    return x.allFinite();
  }

  // Linear predictor from the converged state `u` at load `from`: solves
  // K du = -(r + K_fc dc) for the jump dc in the constrained values. Reuses
  // the factorization of the last Newton step when it is still current.
  bool predict(Eigen::VectorXd& u, double from, double to, double& reference) {
    if (!at_converged_) {
      if (!system_.evaluate(u, true)) return false;
      factor_current_ = false;
    }
    at_converged_ = false;
    const Eigen::VectorXd load = system_.kfc() * ((to - from) * dofs_.target);
    reference = load.norm();
    const Eigen::VectorXd rhs = -(system_.free_part(system_.fint()) + load);
    Eigen::VectorXd du;
    if (factor_current_) {
      du = solver_.solve(rhs);
    } else if (!factor_and_solve(rhs, du)) {
      return false;
    }
    if (!du.allFinite()) return false;
    const Eigen::VectorXd start = u;
    for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
      u = start;
      add_free(u, du, alpha);
      set_constrained(u, to);
      if (system_.evaluate(u, true)) return true;
    }
    return false;
  }

  // Advances `u` from load factor `from` to `to`. On failure `u` is garbage.
  bool increment(Eigen::VectorXd& u, double from, double to, bool from_converged) {
    IncrementTrace rec{from, to, {}, false};
    auto fail = [&] {
      at_converged_ = false;
      trace_.push_back(rec);
      return false;
    };
    const Eigen::VectorXd start = u;
    double reference = 0.0;
    if (dofs_.num_free == 0) {
      set_constrained(u, to);
      rec.converged = system_.evaluate(u, false);
      trace_.push_back(rec);
      return rec.converged;
    }
    bool ready = false;
    if (from_converged && opts_.linear_predictor) ready = predict(u, from, to, reference);
    if (!ready) {
      u = start;
      set_constrained(u, to);
      ready = system_.evaluate(u, true);
      // When jumping the constrained values inverts elements, fall back to
      // the predictor if it has not been tried yet.
      if (!ready && from_converged && !opts_.linear_predictor) {
        u = start;
        ready = predict(u, from, to, reference);
      }
      if (!ready) return fail();
    }
    for (int it = 0;; ++it) {
      const Eigen::VectorXd r = system_.free_part(system_.fint());
      const double norm = r.norm();
      rec.residuals.push_back(norm);
      if (it == 0 && reference == 0.0) reference = norm;
      if (!std::isfinite(norm)) break;
      if (norm < opts_.tol_abs || norm <= opts_.tol_rel * reference) {
        rec.converged = true;
        break;
      }
      if (it >= opts_.max_iterations) break;
      Eigen::VectorXd du;
      if (!factor_and_solve(-r, du)) break;
      factor_current_ = true;
      // Halve the Newton step while it inverts an element.
      Eigen::VectorXd trial;
      bool admissible = false;
      for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
        trial = u;
        add_free(trial, du, alpha);
        if (system_.evaluate(trial, true)) {
          admissible = true;
          break;
        }
      }
      if (!admissible) break;
      u = trial;
    }
    if (!rec.converged) return fail();
    at_converged_ = true;
    trace_.push_back(rec);
    return true;
  }

  Solution finish(const Eigen::VectorXd& u) {
    if (!system_.evaluate(u, false)) throw SolverError("final state is inverted");
    Solution sol;
    sol.displacement = Eigen::Map<const Eigen::Matrix3Xd>(u.data(), 3, mesh_.num_nodes());
    std::vector<char> touched(mesh_.num_nodes(), 0);
    for (int g : dofs_.constrained) touched[g / 3] = 1;
    for (int n = 0; n < mesh_.num_nodes(); ++n) {
      if (!touched[n]) continue;
      sol.constrained.push_back(n);
      sol.reactions.push_back(system_.fint().segment<3>(3 * n));
    }
    sol.trace = std::move(trace_);
    return sol;
  }

  const Mesh& mesh_;
  const SolverOptions& opts_;
  DofMap dofs_;
  System system_;
  LinearSolver solver_;
  bool at_converged_ = false;    // system holds fint/tangent of the last converged state
  bool factor_current_ = false;  // factorization is from a Newton step of that state
  std::vector<IncrementTrace> trace_;
};

}  // namespace

Eigen::VectorXd internal_force(const Mesh& mesh, const Material& mat, const Eigen::VectorXd& u) {
  if (u.size() != 3 * mesh.num_nodes()) throw ShapeError("displacement vector has the wrong size");
  const auto geo = precompute_geometry(mesh);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(u.size());
  Vec30 fe;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!element_kernel(geo[e], mat, gather(mesh, e, u), fe, nullptr)) {
      throw ValidationError("element " + std::to_string(mesh.element_id(e)) + " is inverted");
    }
    for (int a = 0; a < 10; ++a) f.segment<3>(3 * mesh.element(e)[a]) += fe.segment<3>(3 * a);
  }
  return f;
}

Eigen::SparseMatrix<double> tangent_stiffness(const Mesh& mesh, const Material& mat, const Eigen::VectorXd& u) {
  if (u.size() != 3 * mesh.num_nodes()) throw ShapeError("displacement vector has the wrong size");
  const auto geo = precompute_geometry(mesh);
  std::vector<Eigen::Triplet<double>> trip;
  Vec30 fe;
  Mat30 ke;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!element_kernel(geo[e], mat, gather(mesh, e, u), fe, &ke)) {
      throw ValidationError("element " + std::to_string(mesh.element_id(e)) + " is inverted");
    }
    const Element& el = mesh.element(e);
    for (int r = 0; r < 30; ++r) {
      for (int c = 0; c < 30; ++c) {
        trip.emplace_back(3 * el[r / 3] + r % 3, 3 * el[c / 3] + c % 3, 0.5 * (ke(r, c) + ke(c, r)));
      }
    }
  }
  Eigen::SparseMatrix<double> k(u.size(), u.size());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Solution solve_static(const Mesh& mesh, const Material& mat, const BoundaryConditions& bc, const SolverOptions& opts) {
  mat.check();
  return NewtonSolver(mesh, mat, bc, opts).run();
}

BoundaryConditions tie_contact(const Mesh& mesh, const IndenterScene& scene, const ContactOptions& opts) {
  if (!(scene.depth >= 0.0)) throw ValidationError("indentation depth must be non-negative");
  BoundaryConditions bc;
  for (int n : mesh.node_set(opts.fixed_set)) bc.fixed_nodes.push_back(mesh.node_id(n));

  const std::vector<int> surface = mesh.surface_nodes(opts.surface);
  if (surface.empty()) throw ValidationError("contact surface " + opts.surface + " is empty");
  double z_top = -std::numeric_limits<double>::infinity();
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (int n : surface) {
    const Vec3& x = mesh.node(n);
    z_top = std::max(z_top, x.z());
    lo = lo.cwiseMin(x.head<2>());
    hi = hi.cwiseMax(x.head<2>());
  }
  if (scene.depth <= opts.tolerance) return bc;

  // Place the indenter: rotated about its origin, lowest point at z_top - depth.
  const Eigen::Matrix3d& rot = scene.rotation;
  const Vec3 lowest_local = scene.indenter.support(rot.transpose() * Vec3(0, 0, -1));
  const double origin_z = z_top - scene.depth - (rot * lowest_local).z();
  const Vec3 origin(scene.position.x(), scene.position.y(), origin_z);
  const Vec3 up_local = rot.transpose() * Vec3::UnitZ();
  const double below = z_top - scene.depth - 1.0;

  std::set<int> fixed;
  for (int id : bc.fixed_nodes) fixed.insert(id);
  for (int n : surface) {
    const Vec3& x = mesh.node(n);
    const Vec3 start(x.x(), x.y(), below);
    auto t = scene.indenter.ray_entry(rot.transpose() * (start - origin), up_local);
    if (!t) continue;
    const double push = x.z() - (below + *t);
    if (push <= opts.tolerance) continue;
    const Eigen::Vector2d moved = x.head<2>() + scene.offset;
    if ((moved.array() < lo.array() - 1e-12).any() || (moved.array() > hi.array() + 1e-12).any()) {
      throw ValidationError("tangential offset moves contact node " + std::to_string(mesh.node_id(n)) +
                            " off the gel surface");
    }
    if (fixed.count(mesh.node_id(n))) throw ValidationError("contact node is also pinned");
    bc.prescribed[mesh.node_id(n)] = Vec3(scene.offset.x(), scene.offset.y(), -push);
  }
  if (bc.prescribed.empty()) {
    throw ValidationError("indenter does not reach any contact node; check the scene alignment");
  }
  return bc;
}

std::vector<Vec3> surface_element_forces(const Mesh& mesh, const Solution& sol, const std::string& surface) {
  const auto& faces = mesh.surface(surface);
  std::vector<int> count(mesh.num_nodes(), 0);
  for (const SurfaceFace& f : faces) {
    for (int n : mesh.face_nodes(f)) ++count[n];
  }
  std::vector<Vec3> out(faces.size(), Vec3::Zero());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (int n : mesh.face_nodes(faces[i])) out[i] += sol.reaction(n) / count[n];
  }
  return out;
}

nlohmann::json solution_to_json(const Mesh& mesh, const Solution& sol) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec3 u = sol.displacement.col(n);
    nlohmann::json rec = {{"id", mesh.node_id(n)}, {"u", {u.x(), u.y(), u.z()}}};
    auto it = std::lower_bound(sol.constrained.begin(), sol.constrained.end(), n);
    if (it != sol.constrained.end() && *it == n) {
      const Vec3& r = sol.reactions[it - sol.constrained.begin()];
      rec["rf"] = {r.x(), r.y(), r.z()};
    }
    nodes.push_back(std::move(rec));
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : sol.trace) {
    trace.push_back({{"from", t.load_from}, {"to", t.load_to}, {"residuals", t.residuals}, {"converged", t.converged}});
  }
  return {{"nodes", nodes}, {"trace", trace}};
}

Solution solution_from_json(const Mesh& mesh, const nlohmann::json& j) {
  Solution sol;
  sol.displacement = Eigen::Matrix3Xd::Zero(3, mesh.num_nodes());
  std::vector<std::pair<int, Vec3>> rf;
  for (const auto& rec : j.at("nodes")) {
    const int n = mesh.node_index(rec.at("id").get<int>());
    const auto u = rec.at("u").get<std::vector<double>>();
    if (u.size() != 3) throw FormatError("displacement needs three components");
    sol.displacement.col(n) = Vec3(u[0], u[1], u[2]);
    if (rec.contains("rf")) {
      const auto r = rec.at("rf").get<std::vector<double>>();
      if (r.size() != 3) throw FormatError("reaction needs three components");
      rf.emplace_back(n, Vec3(r[0], r[1], r[2]));
    }
  }
  std::sort(rf.begin(), rf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [n, r] : rf) {
    sol.constrained.push_back(n);
    sol.reactions.push_back(r);
  }
  if (j.contains("trace")) {
    for (const auto& t : j.at("trace")) {
      sol.trace.push_back({t.at("from").get<double>(), t.at("to").get<double>(),
                           t.at("residuals").get<std::vector<double>>(), t.at("converged").get<bool>()});
    }
  }
  return sol;
}

}  // namespace gelforce
