#include "idslab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <json.hpp>

#include "idslab/errors.hpp"
#include "idslab/parallel.hpp"
#include "idslab/spectral.hpp"

namespace idslab {

// ---- sandwich ------------------------------------------------------------------

SandwichReport sandwich_check(const IdsCurve& estimate, const IdsCurve& reference,
                              const SandwichParams& params) {
  if (!(params.alpha > 0.0) || !(params.tau > 0.0) || !(params.C > 0.0))
    throw ConfigError("sandwich needs alpha, tau, C > 0");
  SandwichReport rep;
  rep.params = params;

  struct RowBase {
    double E, N, se, ref_minus, ref_plus, unit;
  };
  std::vector<RowBase> base;
  base.reserve(estimate.energies.size());
  double needed = params.C;
  for (std::size_t i = 0; i < estimate.energies.size(); ++i) {
    double E = estimate.energies[i];
    double shift = std::pow(E, params.alpha);
    RowBase rb;
    rb.E = E;
    rb.N = estimate.values[i];
    rb.se = estimate.stderrs.empty() ? 0.0 : estimate.stderrs[i];
    rb.ref_minus = reference.value_at(E - shift);  // 0 below zero by anchor
    rb.ref_plus = reference.value_at(E + shift);
    rb.unit = std::exp(-std::pow(E, -params.tau));
    if (params.fit_C && rb.unit > 0.0) {
      needed = std::max(needed, (rb.ref_minus - rb.N) / rb.unit);
      needed = std::max(needed, (rb.N - rb.ref_plus) / rb.unit);
    }
    base.push_back(rb);
  }
  rep.C_final = params.fit_C ? needed : params.C;

  rep.all_pass = true;
  for (const auto& rb : base) {
    SandwichRow row;
    row.E = rb.E;
    row.N = rb.N;
    row.stderr_ = rb.se;
    row.ref_minus = rb.ref_minus;
    row.ref_plus = rb.ref_plus;
    row.slack = rep.C_final * rb.unit;
    row.lower_margin = rb.N - rb.ref_minus + row.slack;
    row.upper_margin = rb.ref_plus - rb.N + row.slack;
    double grace = 3.0 * rb.se + 1e-12;
    row.pass = row.lower_margin >= -grace && row.upper_margin >= -grace;
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string SandwichReport::to_json() const {
  nlohmann::json j;
  j["alpha"] = params.alpha;
  j["tau"] = params.tau;
  j["C_requested"] = params.C;
  j["C_final"] = C_final;
  j["all_pass"] = all_pass;
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"E", r.E},
                         {"N", r.N},
                         {"stderr", r.stderr_},
                         {"ref_minus", r.ref_minus},
                         {"ref_plus", r.ref_plus},
                         {"slack", r.slack},
                         {"lower_margin", r.lower_margin},
                         {"upper_margin", r.upper_margin},
                         {"pass", r.pass}});
  }
  j["rows"] = rows_json;
  return j.dump(2);
}

// ---- bracket -------------------------------------------------------------------

BracketReport approximation_check(const CoefficientSpec& spec, double E,
                                  double eps, int n, long samples,
                                  std::uint64_t seed, double eta, double rho,
                                  int mid_extent, int theta_nodes, int workers) {
  if (!(E > 0.0) || !(eps > 0.0) || !(E - eps > 0.0))
    throw ConfigError("bracket needs 0 < eps < E");
  if (!(eta > 0.0) || !(rho > 0.0))
    throw ConfigError("bracket needs eta, rho > 0");
  if (samples < 2) throw ConfigError("bracket needs samples >= 2");
  double n_required = std::pow(eps, -rho);
  if (static_cast<double>(n) < n_required - 1e-9)
    throw ConfigError("periodization scale too small: need n >= eps^-rho = " +
                      std::to_string(n_required) + ", got " +
                      std::to_string(n));

  BracketReport rep;
  rep.E = E;
  rep.eps = eps;
  rep.n = n;
  rep.eta = eta;
  rep.rho = rho;
  rep.samples = samples;
  rep.seed = seed;
  rep.slack = std::exp(-std::pow(eps, -eta));

  std::vector<double> shifted{E - eps, E + eps};
  IdsCurve ring = expected_periodized_ids(spec, 2 * n + 1, shifted, theta_nodes,
                                          samples, seed, workers);
  rep.inner = ring.values[0];
  rep.inner_se = ring.stderrs[0];
  rep.outer = ring.values[1];
  rep.outer_se = ring.stderrs[1];

  IdsCurve mid = finite_volume_ids(spec, mid_extent,
                                   BoundaryCondition::Dirichlet(), {E}, samples,
                                   seed + 1, workers);
  rep.mid = mid.values[0];
  rep.mid_se = mid.stderrs[0];

  double se_lower = std::sqrt(rep.inner_se * rep.inner_se +
                              rep.mid_se * rep.mid_se);
  double se_upper = std::sqrt(rep.outer_se * rep.outer_se +
                              rep.mid_se * rep.mid_se);
  rep.lower_ok = rep.inner - rep.slack <= rep.mid + 3.0 * se_lower + 1e-12;
  rep.upper_ok = rep.mid <= rep.outer + rep.slack + 3.0 * se_upper + 1e-12;
  rep.width = (rep.outer + rep.slack) - (rep.inner - rep.slack);
  return rep;
}

std::string BracketReport::to_json() const {
  nlohmann::json j;
  j["E"] = E;
  j["eps"] = eps;
  j["n"] = n;
  j["eta"] = eta;
  j["rho"] = rho;
  j["samples"] = samples;
  j["seed"] = seed;
  j["inner"] = inner;
  j["inner_se"] = inner_se;
  j["mid"] = mid;
  j["mid_se"] = mid_se;
  j["outer"] = outer;
  j["outer_se"] = outer_se;
  j["slack"] = slack;
  j["lower_ok"] = lower_ok;
  j["upper_ok"] = upper_ok;
  j["width"] = width;
  return j.dump(2);
}

// ---- deviation event -----------------------------------------------------------

DeviationEstimate deviation_event_probability(const CoefficientSpec& spec,
                                              int n, double E, double alpha,
                                              long trials, std::uint64_t seed,
                                              double subspace_scale,
                                              int workers) {
  if (n < 1) throw ConfigError("deviation needs n >= 1");
  if (!(E > 0.0) || !(alpha > 0.0))
    throw ConfigError("deviation needs E, alpha > 0");
  if (trials < 1) throw ConfigError("deviation needs trials >= 1");
  if (!(subspace_scale > 0.0))
    throw ConfigError("deviation needs subspace_scale > 0");

  int extent = 2 * n + 1;
  BoundaryCondition bc = BoundaryCondition::Periodic();

  // Reference modes: the free operator on the same grid.
  CoefficientSpec free_spec = spec;
  std::fill(free_spec.rho_plus.begin(), free_spec.rho_plus.end(), 1.0);
  std::fill(free_spec.rho_bump.begin(), free_spec.rho_bump.end(), 0.0);
  free_spec.finalize();
  FieldOnGrid free_field = mean_field_on_box(free_spec, extent);
  StiffnessMatrix Afree = assemble(free_field, bc);

  double cutoff = subspace_scale * E * spec.rho_upper;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Afree.dense_real());
  if (es.info() != Eigen::Success)
    throw ComputeError("free reference eigensolve failed");
  long dof = Afree.n_dof();
  double tie = 1e-12 * std::max(1.0, Afree.norm_bound());
  long dim = 0;
  while (dim < dof && es.eigenvalues()(dim) <= cutoff + tie) ++dim;
  if (dim == 0) dim = 1;  // the constant mode always participates
  Eigen::MatrixXd V = es.eigenvectors().leftCols(dim);
  double lam_top = es.eigenvalues()(dim - 1);

  // Edge geometry is shared by every field on this grid/bc; build the
  // difference matrix rows once.
  FieldOnGrid mean = mean_field_on_box(spec, extent);
  StiffnessMatrix Amean = assemble(mean, bc);
  long ne = static_cast<long>(Amean.edges.size());
  Eigen::MatrixXd D(ne, dim);
  for (long e = 0; e < ne; ++e)
    D.row(e) = V.row(Amean.edges[static_cast<std::size_t>(e)].a) -
               V.row(Amean.edges[static_cast<std::size_t>(e)].b);

  double law_radius = std::max(spec.law.hi() - spec.law.mean(),
                               spec.law.mean() - spec.law.lo());
  double bump_max = *std::max_element(spec.rho_bump.begin(),
                                      spec.rho_bump.end());
  double threshold = std::pow(E, alpha);

  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  double inv_h2 = 1.0 / (Amean.h * Amean.h);
  parallel_for(trials, workers, [&](long t) {
    Realization r = draw_realization(spec, extent, seed,
                                     static_cast<std::uint64_t>(t));
    StiffnessMatrix Aw = assemble(periodize(spec, r), bc);
    Eigen::VectorXd w(ne);
    for (long e = 0; e < ne; ++e)
      w(e) = (Aw.edges[static_cast<std::size_t>(e)].kappa -
              Amean.edges[static_cast<std::size_t>(e)].kappa) *
             inv_h2;
    Eigen::MatrixXd F = D.transpose() * w.asDiagonal() * D;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(F,
                                                      Eigen::EigenvaluesOnly);
    double rad = std::max(std::abs(ef.eigenvalues()(0)),
                          std::abs(ef.eigenvalues()(dim - 1)));
    hit[static_cast<std::size_t>(t)] = rad >= threshold ? 1 : 0;
  });

  DeviationEstimate out;
  out.n = n;
  out.extent = extent;
  out.E = E;
  out.alpha = alpha;
  out.subspace_scale = subspace_scale;
  out.trials = trials;
  for (char h : hit) out.hits += h;
  out.p_hat = static_cast<double>(out.hits) / static_cast<double>(trials);
  ClopperPearson ci = clopper_pearson(out.hits, trials);
  out.ci_lo = ci.lo;
  out.ci_hi = ci.hi;
  out.subspace_dim = static_cast<int>(dim);
  out.threshold = threshold;
  out.ceiling = bump_max * law_radius * lam_top;
  out.seed = seed;
  return out;
}

std::string DeviationEstimate::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["extent"] = extent;
  j["E"] = E;
  j["alpha"] = alpha;
  j["subspace_scale"] = subspace_scale;
  j["trials"] = trials;
  j["hits"] = hits;
  j["p_hat"] = p_hat;
  j["ci_lo"] = ci_lo;
  j["ci_hi"] = ci_hi;
  j["subspace_dim"] = subspace_dim;
  j["threshold"] = threshold;
  j["ceiling"] = ceiling;
  j["seed"] = seed;
  return j.dump(2);
}

// ---- large deviations ----------------------------------------------------------

LdRate ld_rate(const DisorderLaw& law, long cells, double t) {
  if (cells < 1) throw ConfigError("ld_rate needs cells >= 1");
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("ld_rate needs t >= 0");

  LdRate out;
  double span = law.hi() - law.lo();
  out.hoeffding_bound =
      span > 0.0
          ? std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(cells) *
                                         t * t / (span * span)))
          : (t > 0.0 ? 0.0 : 1.0);

  if (law.kind == DisorderLaw::Kind::bernoulli) {
    out.exact = true;
    out.method = "binomial-exact";
    double gap = std::abs(law.v1 - law.v0);
    if (gap == 0.0) {
      out.probability = t <= 0.0 ? 1.0 : 0.0;
    } else if (t == 0.0) {
      out.probability = 1.0;
    } else {
      // S = number of v1 cells; |mean - law mean| >= t iff |S/m - p| >= t/gap.
      double tp = t / gap;
      double m = static_cast<double>(cells);
      boost::math::binomial_distribution<double> bin(m, law.p);
      double prob = 0.0;
      long k_hi = static_cast<long>(std::ceil(m * (law.p + tp) - 1e-9));
      long k_lo = static_cast<long>(std::floor(m * (law.p - tp) + 1e-9));
      if (k_hi <= cells)
        prob += boost::math::cdf(boost::math::complement(
            bin, static_cast<double>(k_hi) - 1.0));
      if (k_lo >= 0)
        prob += boost::math::cdf(bin, static_cast<double>(k_lo));
      out.probability = std::min(1.0, prob);
    }
  } else {
    out.exact = false;
    out.method = "hoeffding";
    out.probability = out.hoeffding_bound;
  }

  out.rate_per_cell =
      out.probability > 0.0
          ? -std::log(out.probability) / static_cast<double>(cells)
          : std::numeric_limits<double>::infinity();
  return out;
}

ClopperPearson clopper_pearson(long hits, long trials, double confidence) {
  if (trials < 1) throw ConfigError("clopper_pearson needs trials >= 1");
  if (hits < 0 || hits > trials)
    throw ConfigError("clopper_pearson needs 0 <= hits <= trials");
  if (!(confidence > 0.0) || !(confidence < 1.0))
    throw ConfigError("confidence must lie in (0, 1)");
  double a = 0.5 * (1.0 - confidence);
  ClopperPearson ci;
  double h = static_cast<double>(hits);
  double n = static_cast<double>(trials);
  ci.lo = hits == 0 ? 0.0 : boost::math::ibeta_inv(h, n - h + 1.0, a);
  ci.hi = hits == trials ? 1.0 : boost::math::ibeta_inv(h + 1.0, n - h, 1.0 - a);
  return ci;
}

TailFit fit_tail(std::span<const double> energies,
                 std::span<const double> p_hats) {
  if (energies.size() != p_hats.size())
    throw ConfigError("fit_tail needs matching array lengths");
  if (energies.empty()) throw ConfigError("fit_tail needs data");

  bool any_nonzero = false;
  int dropped_zero = 0, dropped_one = 0;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    double E = energies[i], p = p_hats[i];
    if (!(E > 0.0)) throw ConfigError("fit_tail needs positive energies");
    if (p < 0.0 || p > 1.0)
      throw ConfigError("fit_tail needs p_hat in [0, 1]");
    if (p > 0.0) any_nonzero = true;
    if (p <= 0.0) {
      ++dropped_zero;
      continue;
    }
    if (p >= 1.0) {
      ++dropped_one;
      continue;
    }
    x.push_back(std::log(1.0 / E));
    y.push_back(std::log(-std::log(p)));
  }

  TailFit fit;
  if (!any_nonzero) {
    fit.tau = std::numeric_limits<double>::quiet_NaN();
    fit.note = "all p_hat are zero: consistent with the slack bound at every "
               "energy; tau is below the resolution of this trial budget";
    return fit;
  }
  if (x.size() < 2)
    throw ConfigError("fit_tail needs at least two p_hat strictly inside (0,1)");

  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw ConfigError("fit_tail needs distinct energies");
  fit.tau = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.tau * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.intercept + fit.tau * x[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.points_used = static_cast<int>(x.size());
  if (dropped_zero + dropped_one > 0)
    fit.note = "dropped " + std::to_string(dropped_zero) + " zero and " +
               std::to_string(dropped_one) + " saturated points";
  return fit;
}

}  // namespace idslab
