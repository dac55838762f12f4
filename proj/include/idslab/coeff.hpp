#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace idslab {

// Law of one lattice weight. Weights at distinct sites are independent and
// identically distributed.
struct DisorderLaw {
  enum class Kind { bernoulli, uniform };

  Kind kind = Kind::bernoulli;
  // bernoulli: value v1 with probability p, else v0.
  // uniform: uniform on [v0, v1]; p is ignored.
  double p = 0.5;
  double v0 = 0.0;
  double v1 = 1.0;

  double mean() const;
  double variance() const;
  double lo() const;  // infimum of the support
  double hi() const;  // supremum of the support
  bool degenerate() const;

  // Inverse-CDF draw from one uniform variate in [0, 1).
  double draw(double u) const;

  // E[ 1 / (base + w * amp) ]; requires base + w*amp > 0 on the support.
  double mean_reciprocal_of(double base, double amp) const;

  std::string describe() const;

  // Parses "bernoulli:p,v0,v1" or "uniform:a,b".
  static DisorderLaw parse(const std::string& text);
};

// One-period profiles plus the disorder law. The coefficient over a box of
// `extent` unit cells per axis is
//   rho(x) = rho_plus(x) + w_cell(x) * rho_bump(x),
// where both profiles are 1-periodic, sampled on an m-per-axis grid of cell
// values, and w_cell is the weight of the unit cell containing x. Profiles
// are stored x-fastest with m^d entries.
struct CoefficientSpec {
  int d = 1;
  int m = 8;
  std::vector<double> rho_plus;
  std::vector<double> rho_bump;
  DisorderLaw law;

  // Derived uniform ellipticity bounds, filled by finalize():
  // 0 < rho_lower <= rho(x, w) <= rho_upper for every x and admissible w.
  double rho_lower = 0.0;
  double rho_upper = 0.0;

  long cells_per_period() const;  // m^d
  // Validates shapes and positivity and computes the bounds. Throws
  // ConfigError naming the offending grid point otherwise.
  void finalize();

  std::string to_json() const;
  static CoefficientSpec from_text(const std::string& text);
  static CoefficientSpec from_file(const std::filesystem::path& file);
};

// One draw of the i.i.d. cell weights on a box of extent^d unit cells.
struct Realization {
  int d = 1;
  int extent = 1;
  std::uint64_t seed = 0;
  std::uint64_t sample_index = 0;
  std::vector<double> omega;  // extent^d weights, x-fastest

  long cells() const;
};

Realization draw_realization(const CoefficientSpec& spec, int extent,
                             std::uint64_t seed, std::uint64_t sample_index);

// How a concrete grid of coefficient values was produced. Operators with
// periodic or twisted boundary conditions require a field that is genuinely
// periodic over the box (periodized or deterministic), never a raw draw.
enum class FieldKind { realized, periodized, homogenized, reciprocal };

// Coefficient sampled at cell centers of the box [0, extent]^d with mesh
// 1/m: values[c] is the value on cell c, x-fastest, (m*extent)^d entries.
struct FieldOnGrid {
  int d = 1;
  int m = 8;
  int extent = 1;
  FieldKind kind = FieldKind::realized;
  std::vector<double> values;
  double lower = 0.0;  // min over the grid
  double upper = 0.0;  // max over the grid

  int cells_per_axis() const { return m * extent; }
  long cell_count() const;
  double at(long cx) const { return values[static_cast<std::size_t>(cx)]; }
  double at(long cx, long cy) const {
    return values[static_cast<std::size_t>(cy) * cells_per_axis() + cx];
  }
};

// Evaluates rho on the grid for one realization. Every sample is checked
// against the spec's ellipticity bounds; a violation throws DomainError.
FieldOnGrid sample_field(const CoefficientSpec& spec, const Realization& r);
FieldOnGrid sample_field(const CoefficientSpec& spec, int extent,
                         std::uint64_t seed, std::uint64_t sample_index);

// Same values as sample_field(spec, r), but declared periodic over the box:
// the box pattern repeats with period `extent` in every axis. Admissible for
// periodic and twisted boundary conditions.
FieldOnGrid periodize(const CoefficientSpec& spec, const Realization& r);

// The homogenized comparison coefficient on one period (extent 1).
// arithmetic (default):  mean_rho(x)     = E[rho(x, w)]
// harmonic:              mean_rho(x)     = 1 / E[1 / rho(x, w)]
FieldOnGrid mean_field(const CoefficientSpec& spec, bool harmonic = false);

// Same as mean_field but tiled over a box of the given extent.
FieldOnGrid mean_field_on_box(const CoefficientSpec& spec, int extent,
                              bool harmonic = false);

// Pointwise reciprocal 1/field. Requires a strictly positive input.
FieldOnGrid reciprocal_field(const FieldOnGrid& field);

}  // namespace idslab
