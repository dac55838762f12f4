#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idslab/coeff.hpp"

namespace idslab {

enum class BcKind { dirichlet, neumann, periodic, floquet };

struct BoundaryCondition {
  BcKind kind = BcKind::dirichlet;
  // Twist angles per axis, used only by floquet: u(x + extent*e_a) =
  // exp(i*theta[a]) * u(x).
  std::array<double, 2> theta{0.0, 0.0};

  static BoundaryCondition Dirichlet() { return {BcKind::dirichlet, {0, 0}}; }
  static BoundaryCondition Neumann() { return {BcKind::neumann, {0, 0}}; }
  static BoundaryCondition Periodic() { return {BcKind::periodic, {0, 0}}; }
  static BoundaryCondition Floquet(double tx, double ty = 0.0) {
    return {BcKind::floquet, {tx, ty}};
  }
  const char* name() const;
};

// Finite-difference form of -div(rho grad .) on vertex unknowns with the
// coefficient sampled at cell centers. Stored as an edge list so that the
// quadratic form can be evaluated edge-wise:
//   q(u) = sum_edges  kappa/h^2 |u_a - e^{i phase} u_b|^2
//        + sum_half   kappa/h^2 |u_a|^2                  (Dirichlet walls)
//        + sum_self   kappa/h^2 |1 - e^{i phase}|^2 |u_a|^2.
// This makes Hermiticity and q(u) >= 0 structural facts rather than numeric
// accidents. Self edges only occur when an axis has a single vertex.
struct StiffnessMatrix {
  struct Edge {
    std::int32_t a;
    std::int32_t b;
    double kappa;
    double phase;  // angle; the matrix entry A[a,b] gets -kappa/h^2 e^{i phase}
  };
  struct HalfEdge {
    std::int32_t a;
    double kappa;
  };
  struct SelfEdge {
    std::int32_t a;
    double kappa;
    double phase;
  };

  int d = 1;
  std::array<int, 2> npts{0, 1};  // unknowns per axis; npts[1] == 1 in 1D
  double h = 1.0;
  BoundaryCondition bc;
  std::vector<Edge> edges;
  std::vector<HalfEdge> half_edges;
  std::vector<SelfEdge> self_edges;
  std::string provenance;  // short description of the source field

  long n_dof() const { return static_cast<long>(npts[0]) * npts[1]; }
  bool is_complex() const;
  // Gershgorin upper bound for the spectrum; scale for tolerance choices.
  double norm_bound() const;

  Eigen::SparseMatrix<std::complex<double>> sparse() const;
  // Dense assembly; throws ComputeError when n_dof() exceeds cap.
  Eigen::MatrixXcd dense(long cap = 4096) const;
  Eigen::MatrixXd dense_real(long cap = 4096) const;

  void multiply(std::span<const std::complex<double>> x,
                std::span<std::complex<double>> y) const;
};

// Builds the operator for the given field and boundary condition.
// Unknowns per axis with C = m*extent cells on that axis:
//   dirichlet: C-1 interior vertices, neumann: C+1, periodic/floquet: C.
// Edge coefficients: in 1D the edge midpoint is a cell center, so kappa is
// that cell's value; across an axis in 2D the midpoint lies on a cell face,
// so kappa is the mean of the two touching cells (wrapped when the transverse
// axis is periodic, clamped at Neumann walls). Requires a strictly positive
// field; periodic and floquet require a field that is periodic over the box
// (kind != realized).
StiffnessMatrix assemble(const FieldOnGrid& field, const BoundaryCondition& bc);

// Edge-wise Dirichlet energy of u; exactly real and nonnegative.
double quadratic_form(const StiffnessMatrix& A,
                      std::span<const std::complex<double>> u);

}  // namespace idslab
