#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idslab/coeff.hpp"
#include "idslab/discretize.hpp"

namespace idslab {

struct IdsMeta {
  std::string method;  // "fv", "floquet", "homog", "smoothed"
  std::string bc;
  int d = 1;
  int m = 0;
  int extent = 0;
  long samples = 0;
  std::uint64_t seed = 0;
  int theta_nodes = 0;
  std::string spec_json;
};

// Tabulated eigenvalue-counting curve E -> N(E), normalized per unit volume
// of the continuum box (count / extent^d). Monotone nondecreasing in E.
struct IdsCurve {
  std::vector<double> energies;  // ascending, > 0
  std::vector<double> values;
  std::vector<double> stderrs;  // 0 for deterministic curves
  IdsMeta meta;

  // Piecewise-linear evaluation anchored at (0, 0); arguments <= 0 give 0.
  // Throws RangeError above the tabulated top energy.
  double value_at(double E) const;
  double stderr_at(double E) const;  // same interpolation, for error budgets
};

// Geometric grid with `count` points from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, int count);

// Monte Carlo finite-volume estimator: for each sample, the coefficient is
// drawn on a box of `extent` cells per axis, the operator assembled under bc
// (periodic/twisted boundary conditions use the periodized draw), and the
// eigenvalue count at each energy divided by extent^d. Mean and standard
// error over samples. Deterministic for fixed (seed, samples), independent of
// worker count.
IdsCurve finite_volume_ids(const CoefficientSpec& spec, int extent,
                           const BoundaryCondition& bc,
                           const std::vector<double>& energies, long samples,
                           std::uint64_t seed, int workers = 0);

// Twisted-boundary quadrature for a periodic coefficient field: averages
// eigenvalue counts over a midpoint grid of theta_nodes^d twist angles in
// [0, 2pi)^d and divides by the box volume. theta_nodes == 0 selects the
// adaptive rule: double the node count until the curve moves by less than
// 0.5% relative (or 128 nodes per axis is reached). The field must be
// periodic over its box (kind != realized).
IdsCurve floquet_ids(const FieldOnGrid& field,
                     const std::vector<double>& energies, int theta_nodes = 0,
                     int workers = 0);

// Curve of the homogenized operator: floquet_ids of mean_field(spec) on one
// period.
IdsCurve homogenized_ids(const CoefficientSpec& spec,
                         const std::vector<double>& energies,
                         int theta_nodes = 0, bool harmonic = false,
                         int workers = 0);

// E[ floquet_ids of the periodized draw ] over `samples` draws on a box of
// the given extent: the expected periodized finite-volume curve.
IdsCurve expected_periodized_ids(const CoefficientSpec& spec, int extent,
                                 const std::vector<double>& energies,
                                 int theta_nodes, long samples,
                                 std::uint64_t seed, int workers = 0);

// Gaussian test function truncated at 6 sigma and renormalized to unit mass
// over the window.
struct TestFunction {
  double center = 0.0;
  double sigma = 1.0;

  double operator()(double x) const;
  double deriv(double x) const;
  double support_lo() const { return center - 6.0 * sigma; }
  double support_hi() const { return center + 6.0 * sigma; }
};

struct SmoothedValue {
  double value = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
  long dof = 0;
};

// Monte Carlo estimate of E[ (1/vol) sum_i phi(lambda_i) ] on a box of the
// given extent under bc (dense eigensolve; extent is capped by the dense
// limit of 4096 unknowns).
SmoothedValue smoothed_dos(const CoefficientSpec& spec, const TestFunction& phi,
                           int extent, const BoundaryCondition& bc,
                           long samples, std::uint64_t seed, int workers = 0);

// Trapezoid quadrature of -phi'(E) * curve(E) over the support of phi
// intersected with [0, top of the curve]; the smooth pairing of the curve
// against phi. step <= 0 selects sigma/40.
double pair_against_curve(const TestFunction& phi, const IdsCurve& curve,
                          double step = 0.0);

}  // namespace idslab
