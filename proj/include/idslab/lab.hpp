#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idslab/coeff.hpp"
#include "idslab/ids.hpp"

namespace idslab {

// ---- two-sided envelope check ----------------------------------------------

struct SandwichParams {
  double alpha = 0.7;  // energy shift exponent: shifts are E^alpha
  double tau = 0.5;    // slack exponent: slack is C * exp(-E^-tau)
  double C = 1.0;      // slack prefactor; lower bound for the fitted value
  bool fit_C = true;   // fit one C over all rows (never below params.C)
};

struct SandwichRow {
  double E = 0.0;
  double N = 0.0;        // finite-volume estimate at E
  double stderr_ = 0.0;  // its standard error
  double ref_minus = 0.0;  // reference curve at E - E^alpha (0 when negative)
  double ref_plus = 0.0;   // reference curve at E + E^alpha
  double slack = 0.0;      // C * exp(-E^-tau) with the final C
  double lower_margin = 0.0;  // N - ref_minus + slack
  double upper_margin = 0.0;  // ref_plus - N + slack
  bool pass = false;          // both margins >= -3 * stderr
};

struct SandwichReport {
  SandwichParams params;
  double C_final = 1.0;
  std::vector<SandwichRow> rows;
  bool all_pass = false;

  std::string to_json() const;
};

// Checks  ref(E - E^a) - slack <= N(E) <= ref(E + E^a) + slack  on every
// energy of the estimate curve. With fit_C, the single smallest C >= params.C
// making both inequalities hold everywhere is computed first and reported.
// The reference curve must cover E + E^alpha for every tested E.
SandwichReport sandwich_check(const IdsCurve& estimate, const IdsCurve& reference,
                              const SandwichParams& params);

// ---- finite-volume bracket at one energy -----------------------------------

struct BracketReport {
  double E = 0.0;
  double eps = 0.0;
  int n = 0;            // periodization scale; the small box has extent 2n+1
  double eta = 1.0;     // slack exponent: slack = exp(-eps^-eta)
  double rho = 1.0;     // precondition exponent: requires n >= eps^-rho
  long samples = 0;
  std::uint64_t seed = 0;
  double inner = 0.0;   // expected periodized curve at E - eps
  double inner_se = 0.0;
  double mid = 0.0;     // large-box estimate at E
  double mid_se = 0.0;
  double outer = 0.0;   // expected periodized curve at E + eps
  double outer_se = 0.0;
  double slack = 0.0;
  bool lower_ok = false;  // inner - slack <= mid + 3 * joint se
  bool upper_ok = false;  // mid <= outer + slack + 3 * joint se
  double width = 0.0;     // (outer + slack) - (inner - slack)

  std::string to_json() const;
};

// Brackets the large-volume counting function at energy E between expected
// periodized counts at E -+ eps, with slack exp(-eps^-eta). Requires
// n >= eps^-rho (ConfigError otherwise). The large-box estimate uses a
// Dirichlet box of extent `mid_extent` with the same sample budget.
BracketReport approximation_check(const CoefficientSpec& spec, double E,
                                  double eps, int n, long samples,
                                  std::uint64_t seed, double eta = 1.0,
                                  double rho = 1.0, int mid_extent = 400,
                                  int theta_nodes = 16, int workers = 0);

// ---- deviation-event estimator -----------------------------------------------

struct DeviationEstimate {
  int n = 0;
  int extent = 0;       // 2n+1
  double E = 0.0;
  double alpha = 0.0;
  double subspace_scale = 1.0;
  long trials = 0;
  long hits = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;   // 95% Clopper-Pearson
  double ci_hi = 0.0;
  int subspace_dim = 0;
  double threshold = 0.0;  // E^alpha
  // Certified bound on the tested form: sup_w |delta rho|_inf * (top free
  // eigenvalue in the subspace). When ceiling < threshold the event is empty.
  double ceiling = 0.0;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

// Probability that the compression of A_w - A_mean onto the low free modes of
// the box (free eigenvalues <= subspace_scale * E * rho_upper) has spectral
// radius >= E^alpha, estimated over `trials` independent draws on the box of
// extent 2n+1 with periodic wrap. Exact Clopper-Pearson 95% interval.
DeviationEstimate deviation_event_probability(const CoefficientSpec& spec,
                                              int n, double E, double alpha,
                                              long trials, std::uint64_t seed,
                                              double subspace_scale = 1.0,
                                              int workers = 0);

// ---- large-deviation rates and tail fits --------------------------------------

struct LdRate {
  double probability = 0.0;     // P(|mean of cells - law mean| >= t)
  double hoeffding_bound = 0.0; // 2 exp(-2 m t^2 / (hi-lo)^2)
  double rate_per_cell = 0.0;   // -log(probability)/m; inf when probability=0
  bool exact = false;           // true for the Bernoulli closed computation
  std::string method;           // "binomial-exact" or "hoeffding"
};

// Two-sided deviation probability of the empirical mean of m i.i.d. cells.
// Bernoulli laws get the exact binomial tail; other bounded laws get the
// Hoeffding bound as the probability estimate.
LdRate ld_rate(const DisorderLaw& law, long cells, double t);

struct ClopperPearson {
  double lo = 0.0;
  double hi = 1.0;
};

// Exact two-sided Clopper-Pearson interval at the given confidence.
ClopperPearson clopper_pearson(long hits, long trials, double confidence = 0.95);

struct TailFit {
  double tau = 0.0;        // slope of log(-log p) against log(1/E)
  double intercept = 0.0;
  double residual_rms = 0.0;
  int points_used = 0;
  std::string note;
};

// Least-squares fit of p(E) ~ exp(-c * E^-tau) through the points with
// 0 < p < 1. All-zero data returns tau = NaN with an explanatory note instead
// of an error; fewer than two usable points is a ConfigError.
TailFit fit_tail(std::span<const double> energies, std::span<const double> p_hats);

}  // namespace idslab
