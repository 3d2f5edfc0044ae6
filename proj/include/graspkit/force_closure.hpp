#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "graspkit/errors.hpp"
#include "graspkit/materials.hpp"
#include "graspkit/simplex.hpp"

namespace graspkit {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Wrench = Eigen::Matrix<Scalar, 6, 1>;

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Vector3<Scalar>& v) {
  Eigen::Matrix<Scalar, 3, 3> s;
  s << Scalar(0), -v.z(), v.y(),  //
      v.z(), Scalar(0), -v.x(),   //
      -v.y(), v.x(), Scalar(0);
  return s;
}

/// Maps stacked world-frame contact forces [f1; f2] to the net wrench about
/// `com_used`. Block i is [I3; skew(p_i - com)] (hard-finger point contacts).
template <typename Scalar>
struct GraspMatrixT {
  Eigen::Matrix<Scalar, 6, 6> columns;
  Vector3<Scalar> com_used;

  /// Contact offset p_i - com recovered from the torque block.
  Vector3<Scalar> lever(int i) const {
    const auto s = columns.template block<3, 3>(3, 3 * i);
    return {s(2, 1), s(0, 2), s(1, 0)};
  }
};

using GraspMatrix = GraspMatrixT<double>;

template <typename Scalar>
GraspMatrixT<Scalar> grasp_matrix(const Vector3<Scalar>& p1, const Vector3<Scalar>& p2,
                                  const Vector3<Scalar>& com) {
  GraspMatrixT<Scalar> g;
  g.columns.setZero();
  g.columns.template block<3, 3>(0, 0).setIdentity();
  g.columns.template block<3, 3>(0, 3).setIdentity();
  g.columns.template block<3, 3>(3, 0) = skew<Scalar>(p1 - com);
  g.columns.template block<3, 3>(3, 3) = skew<Scalar>(p2 - com);
  g.com_used = com;
  return g;
}

/// External wrench acting on the object, expressed at the CoM
/// (gravity is (0, 0, -m g, 0, 0, 0)). The contacts must cancel it.
struct WrenchTask {
  Wrench<double> f_ext = Wrench<double>::Zero();
};

template <typename Scalar>
struct GraspLabelT {
  bool feasible = false;
  Scalar min_force = 0;  // total normal force at the LP optimum, N
  Scalar slack = 0;      // equilibrium residual if feasible, else phase-one infeasibility
  Eigen::Matrix<Scalar, 6, 1> contact_forces = Eigen::Matrix<Scalar, 6, 1>::Zero();
};

using GraspLabel = GraspLabelT<double>;

/// Orthonormal tangent pair for inward normal `n`, with the first tangent
/// along `reference` projected onto the tangent plane when that is well defined.
template <typename Scalar>
std::array<Vector3<Scalar>, 2> tangent_basis(const Vector3<Scalar>& n,
                                             const Vector3<Scalar>& reference) {
  Vector3<Scalar> t = reference - n * n.dot(reference);
  if (t.norm() <= Scalar(1e-9) * (Scalar(1) + reference.norm())) {
    Eigen::Index k = 0;
    n.cwiseAbs().minCoeff(&k);
    t = Vector3<Scalar>::Unit(k) - n * n(k);
  }
  t.normalize();
  return {t, n.cross(t)};
}

/// m unit edges at half-angle atan(mu) around the inward normal.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> friction_cone_edges(const Vector3<Scalar>& inward_normal,
                                                            Scalar mu, int m,
                                                            const Vector3<Scalar>& reference) {
  const auto [t1, t2] = tangent_basis<Scalar>(inward_normal, reference);
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(1) + mu * mu);
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> edges(3, m);
  for (int j = 0; j < m; ++j) {
    const Scalar theta = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(j) / Scalar(m);
    edges.col(j) = (inward_normal + mu * (std::cos(theta) * t1 + std::sin(theta) * t2)) * scale;
  }
  return edges;
}

/// Cone-constrained equilibrium LP:
///
///   minimize   sum(alpha)
///   subject to G * blockdiag(E1, E2) * alpha = -f_ext
///              normal force at contact i <= force_cap_i
///              alpha >= 0
///
/// `normals` are outward surface normals. Each cone's first edge is aligned
/// with the direction toward the other contact so the construction is
/// rotation-equivariant. Throws SolverFailure on the iteration cap.
template <typename Scalar>
GraspLabelT<Scalar> check_force_closure(const GraspMatrixT<Scalar>& G, const WrenchTask& task,
                                        const std::array<ContactModel, 2>& models,
                                        const std::array<Vector3<Scalar>, 2>& normals,
                                        const SimplexOptions& options = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Wrench<Scalar> f_ext = task.f_ext.template cast<Scalar>();

  GraspLabelT<Scalar> label;
  const Scalar scale = f_ext.cwiseAbs().maxCoeff();
  if (scale == Scalar(0)) {
    label.feasible = true;
    return label;
  }

  const int m0 = models[0].cone_edges, m1 = models[1].cone_edges;
  const int nvar = m0 + m1;
  Matrix E = Matrix::Zero(6, nvar);
  std::array<Scalar, 2> normal_share{};
  for (int i = 0; i < 2; ++i) {
    const Vector3<Scalar> inward = -normals[i].normalized();
    Vector3<Scalar> reference = G.lever(1 - i) - G.lever(i);
    if ((reference - inward * inward.dot(reference)).norm() <= Scalar(1e-9) * (Scalar(1) + reference.norm()))
      reference = -G.lever(i);
    const Scalar mu = Scalar(models[i].mu);
    const int m = models[i].cone_edges;
    E.block(3 * i, i == 0 ? 0 : m0, 3, m) = friction_cone_edges<Scalar>(inward, mu, m, reference);
    normal_share[i] = Scalar(1) / std::sqrt(Scalar(1) + mu * mu);
  }
  const Matrix GE = G.columns * E;

  LinearProgram<Scalar> lp;
  lp.c = Vector::Ones(nvar);
  lp.A_eq = GE;
  lp.b_eq = -f_ext / scale;
  lp.A_ub = Matrix::Zero(2, nvar);
  lp.A_ub.block(0, 0, 1, m0).setConstant(normal_share[0]);
  lp.A_ub.block(1, m0, 1, m1).setConstant(normal_share[1]);
  lp.b_ub.resize(2);
  lp.b_ub << Scalar(models[0].force_cap) / scale, Scalar(models[1].force_cap) / scale;

  const auto sol = solve_lp(lp, options);
  if (sol.status == LpStatus::IterationLimit)
    throw SolverFailure("force-closure LP hit the iteration cap");
  if (sol.status != LpStatus::Optimal) {
    label.slack = sol.infeasibility * scale;
    return label;
  }
  const Vector alpha = sol.x * scale;
  label.contact_forces = E * alpha;
  const Scalar residual = (G.columns * label.contact_forces + f_ext).norm();
  label.slack = residual;
  label.min_force = normal_share[0] * alpha.head(m0).sum() + normal_share[1] * alpha.tail(m1).sum();
  label.feasible = residual <= Scalar(1e-6) * (Scalar(1) + f_ext.norm());
  return label;
}

}  // namespace graspkit
