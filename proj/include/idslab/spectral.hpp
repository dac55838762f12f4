#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "idslab/discretize.hpp"

namespace idslab {

// Relative inclusion tolerance for eigenvalue counting: counts are taken at
// E + eps_rel * norm, so eigenvalues within one part in 1e9 of E (at the
// scale of the operator norm) are included.
inline constexpr double kCountEpsRel = 1e-9;

struct CountDetail {
  long count = 0;
  // Extra upward shift (beyond the standard inclusion tolerance) that was
  // needed to move off an exactly singular pivot; 0 in the common case.
  double shift_applied = 0.0;
};

// Number of eigenvalues <= E (inclusive up to the tolerance above) by Sylvester
// inertia of A - E*I. Uses an O(n) elimination on the chain structure that
// assemble() produces: scalar recurrences in 1D, block rows in 2D, with a
// bordering column/row when the boundary condition wraps. Exactly singular
// pivots trigger a retry at a slightly larger shift, reported in the detail.
long eigen_count(const StiffnessMatrix& A, double E);
CountDetail eigen_count_detail(const StiffnessMatrix& A, double E);

// Counts at many energies with the chain built once; same semantics as
// eigen_count_detail at each energy.
std::vector<CountDetail> eigen_count_many(const StiffnessMatrix& A,
                                          std::span<const double> energies);

// Same semantics for a general dense symmetric / Hermitian matrix
// (LAPACK Bunch-Kaufman factorization).
long eigen_count(const Eigen::MatrixXd& A, double E);
long eigen_count(const Eigen::MatrixXcd& A, double E);

struct SpectrumSlice {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXcd vectors;         // one column per eigenvalue; may be empty
  std::string method;               // "dense" or "lanczos"
};

// The k lowest eigenpairs. Dense solve up to dense_cap unknowns, Lanczos with
// full reorthogonalization beyond it.
SpectrumSlice lowest_eigenpairs(const StiffnessMatrix& A, int k,
                                bool want_vectors = true,
                                long dense_cap = 4096);

// Full spectrum via a dense solve; throws ComputeError above cap.
std::vector<double> all_eigenvalues(const StiffnessMatrix& A, long cap = 4096);

}  // namespace idslab
