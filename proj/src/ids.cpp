#include "idslab/ids.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "idslab/errors.hpp"
#include "idslab/parallel.hpp"
#include "idslab/spectral.hpp"

namespace idslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_energies(const std::vector<double>& energies) {
  if (energies.empty()) throw ConfigError("energy grid is empty");
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!(energies[i] > 0.0) || !std::isfinite(energies[i]))
      throw ConfigError("energies must be positive and finite");
    if (i > 0 && !(energies[i] > energies[i - 1]))
      throw ConfigError("energies must be strictly increasing");
  }
}

double box_volume(int d, int extent) {
  double v = 1.0;
  for (int a = 0; a < d; ++a) v *= extent;
  return v;
}

// Mean and standard error of per-sample curves, reduced in sample order so
// the result is independent of the worker count.
void reduce_samples(const std::vector<std::vector<double>>& per_sample,
                    std::vector<double>* mean, std::vector<double>* se) {
  long S = static_cast<long>(per_sample.size());
  std::size_t nE = per_sample.front().size();
  mean->assign(nE, 0.0);
  se->assign(nE, 0.0);
  for (long s = 0; s < S; ++s)
    for (std::size_t i = 0; i < nE; ++i)
      (*mean)[i] += per_sample[static_cast<std::size_t>(s)][i];
  for (std::size_t i = 0; i < nE; ++i) (*mean)[i] /= static_cast<double>(S);
  if (S < 2) return;
  for (long s = 0; s < S; ++s)
    for (std::size_t i = 0; i < nE; ++i) {
      double d = per_sample[static_cast<std::size_t>(s)][i] - (*mean)[i];
      (*se)[i] += d * d;
    }
  for (std::size_t i = 0; i < nE; ++i)
    (*se)[i] = std::sqrt((*se)[i] / (static_cast<double>(S) *
                                     static_cast<double>(S - 1)));
}

}  // namespace

double IdsCurve::value_at(double E) const {
  if (energies.empty()) throw RangeError("empty curve");
  if (E <= 0.0) return 0.0;
  double top = energies.back();
  if (E > top) {
    if (E <= top * (1.0 + 1e-12)) return values.back();
    throw RangeError("curve evaluated at " + std::to_string(E) +
                     " above its top energy " + std::to_string(top));
  }
  // interval [prev, next] with the (0, 0) anchor before the first node
  std::size_t hi = static_cast<std::size_t>(
      std::lower_bound(energies.begin(), energies.end(), E) - energies.begin());
  double e0 = hi == 0 ? 0.0 : energies[hi - 1];
  double v0 = hi == 0 ? 0.0 : values[hi - 1];
  double e1 = energies[hi == energies.size() ? hi - 1 : hi];
  double v1 = values[hi == energies.size() ? hi - 1 : hi];
  if (e1 == e0) return v1;
  double t = (E - e0) / (e1 - e0);
  return v0 + t * (v1 - v0);
}

double IdsCurve::stderr_at(double E) const {
  if (stderrs.empty()) return 0.0;
  if (E <= 0.0) return 0.0;
  double top = energies.back();
  if (E > top) {
    if (E <= top * (1.0 + 1e-12)) return stderrs.back();
    throw RangeError("curve evaluated above its top energy");
  }
  std::size_t hi = static_cast<std::size_t>(
      std::lower_bound(energies.begin(), energies.end(), E) - energies.begin());
  double e0 = hi == 0 ? 0.0 : energies[hi - 1];
  double v0 = hi == 0 ? 0.0 : stderrs[hi - 1];
  double e1 = energies[hi == energies.size() ? hi - 1 : hi];
  double v1 = stderrs[hi == energies.size() ? hi - 1 : hi];
  if (e1 == e0) return v1;
  double t = (E - e0) / (e1 - e0);
  return v0 + t * (v1 - v0);
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("need 0 < lo <= hi");
  if (count < 1) throw ConfigError("need count >= 1");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  double r = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] = lo * std::exp(r * i);
  g.back() = hi;
  return g;
}

IdsCurve finite_volume_ids(const CoefficientSpec& spec, int extent,
                           const BoundaryCondition& bc,
                           const std::vector<double>& energies, long samples,
                           std::uint64_t seed, int workers) {
  check_energies(energies);
  if (samples < 1) throw ConfigError("need samples >= 1");
  bool wraps = bc.kind == BcKind::periodic || bc.kind == BcKind::floquet;
  double vol = box_volume(spec.d, extent);

  std::vector<std::vector<double>> per_sample(
      static_cast<std::size_t>(samples));
  parallel_for(samples, workers, [&](long s) {
    Realization r = draw_realization(spec, extent, seed,
                                     static_cast<std::uint64_t>(s));
    FieldOnGrid f = wraps ? periodize(spec, r) : sample_field(spec, r);
    StiffnessMatrix A = assemble(f, bc);
    auto counts = eigen_count_many(A, energies);
    auto& row = per_sample[static_cast<std::size_t>(s)];
    row.resize(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i)
      row[i] = static_cast<double>(counts[i].count) / vol;
  });

  IdsCurve c;
  c.energies = energies;
  reduce_samples(per_sample, &c.values, &c.stderrs);
  c.meta = {"fv", bc.name(), spec.d, spec.m, extent,
            samples, seed, 0, spec.to_json()};
  return c;
}

namespace {

// One fixed twist-node count per axis: midpoint grid on [0, 2pi)^d.
std::vector<double> floquet_values(const FieldOnGrid& field,
                                   const std::vector<double>& energies, int T,
                                   int workers) {
  long fibers = field.d == 1 ? T : static_cast<long>(T) * T;
  double vol = box_volume(field.d, field.extent);
  std::vector<std::vector<long>> per_fiber(static_cast<std::size_t>(fibers));
  parallel_for(fibers, workers, [&](long f) {
    double tx = kTwoPi * (static_cast<double>(f % T) + 0.5) / T;
    double ty = field.d == 2
                    ? kTwoPi * (static_cast<double>(f / T) + 0.5) / T
                    : 0.0;
    StiffnessMatrix A = assemble(field, BoundaryCondition::Floquet(tx, ty));
    auto counts = eigen_count_many(A, energies);
    auto& row = per_fiber[static_cast<std::size_t>(f)];
    row.resize(energies.size());
    for (std::size_t i = 0; i < energies.size(); ++i)
      row[i] = counts[i].count;
  });
  std::vector<double> vals(energies.size(), 0.0);
  for (long f = 0; f < fibers; ++f)
    for (std::size_t i = 0; i < energies.size(); ++i)
      vals[i] += static_cast<double>(per_fiber[static_cast<std::size_t>(f)][i]);
  for (auto& v : vals) v /= vol * static_cast<double>(fibers);
  return vals;
}

}  // namespace

IdsCurve floquet_ids(const FieldOnGrid& field,
                     const std::vector<double>& energies, int theta_nodes,
                     int workers) {
  check_energies(energies);
  if (field.kind == FieldKind::realized)
    throw AssemblyError(
        "twisted quadrature needs a field that is periodic over its box");
  if (theta_nodes < 0 || theta_nodes > 128)
    throw ConfigError("theta_nodes must lie in [0, 128] (0 = adaptive)");

  int T = theta_nodes;
  std::vector<double> vals;
  if (T > 0) {
    vals = floquet_values(field, energies, T, workers);
  } else {
    // Adaptive: double until the curve moves by less than 0.5% relative.
    T = 8;
    vals = floquet_values(field, energies, T, workers);
    while (T < 128) {
      int T2 = T * 2;
      std::vector<double> next = floquet_values(field, energies, T2, workers);
      double change = 0.0;
      for (std::size_t i = 0; i < vals.size(); ++i) {
        double denom = std::max(std::abs(next[i]), 1e-12);
        change = std::max(change, std::abs(next[i] - vals[i]) / denom);
      }
      vals = std::move(next);
      T = T2;
      if (change < 0.005) break;
    }
  }

  IdsCurve c;
  c.energies = energies;
  c.values = std::move(vals);
  c.stderrs.assign(energies.size(), 0.0);
  c.meta = {"floquet", "floquet", field.d, field.m, field.extent, 0, 0, T, ""};
  return c;
}

IdsCurve homogenized_ids(const CoefficientSpec& spec,
                         const std::vector<double>& energies, int theta_nodes,
                         bool harmonic, int workers) {
  IdsCurve c = floquet_ids(mean_field(spec, harmonic), energies, theta_nodes,
                           workers);
  c.meta.method = "homog";
  c.meta.spec_json = spec.to_json();
  return c;
}

IdsCurve expected_periodized_ids(const CoefficientSpec& spec, int extent,
                                 const std::vector<double>& energies,
                                 int theta_nodes, long samples,
                                 std::uint64_t seed, int workers) {
  check_energies(energies);
  if (samples < 1) throw ConfigError("need samples >= 1");
  int T = theta_nodes;
  if (T == 0) {
    // Resolve the node count once on the homogenized field so every sample
    // uses the same quadrature.
    IdsCurve probe = floquet_ids(mean_field_on_box(spec, extent), energies, 0,
                                 workers);
    T = probe.meta.theta_nodes;
  }

  std::vector<std::vector<double>> per_sample(
      static_cast<std::size_t>(samples));
  parallel_for(samples, workers, [&](long s) {
    Realization r = draw_realization(spec, extent, seed,
                                     static_cast<std::uint64_t>(s));
    per_sample[static_cast<std::size_t>(s)] =
        floquet_values(periodize(spec, r), energies, T, 1);
  });

  IdsCurve c;
  c.energies = energies;
  reduce_samples(per_sample, &c.values, &c.stderrs);
  c.meta = {"floquet-mc", "floquet", spec.d, spec.m, extent,
            samples, seed, T, spec.to_json()};
  return c;
}

// ---- smoothed counting ---------------------------------------------------------

double TestFunction::operator()(double x) const {
  double z = (x - center) / sigma;
  if (std::abs(z) > 6.0) return 0.0;
  static const double renorm = std::erf(6.0 / std::sqrt(2.0));
  double g = std::exp(-0.5 * z * z) /
             (sigma * std::sqrt(2.0 * std::numbers::pi));
  return g / renorm;
}

double TestFunction::deriv(double x) const {
  double z = (x - center) / sigma;
  if (std::abs(z) > 6.0) return 0.0;
  return -(z / sigma) * (*this)(x);
}

SmoothedValue smoothed_dos(const CoefficientSpec& spec, const TestFunction& phi,
                           int extent, const BoundaryCondition& bc,
                           long samples, std::uint64_t seed, int workers) {
  if (samples < 1) throw ConfigError("need samples >= 1");
  if (!(phi.sigma > 0.0)) throw ConfigError("test function needs sigma > 0");
  bool wraps = bc.kind == BcKind::periodic || bc.kind == BcKind::floquet;
  double vol = box_volume(spec.d, extent);

  std::vector<double> per_sample(static_cast<std::size_t>(samples), 0.0);
  long dof = 0;
  parallel_for(samples, workers, [&](long s) {
    Realization r = draw_realization(spec, extent, seed,
                                     static_cast<std::uint64_t>(s));
    FieldOnGrid f = wraps ? periodize(spec, r) : sample_field(spec, r);
    StiffnessMatrix A = assemble(f, bc);
    if (s == 0) dof = A.n_dof();
    double acc = 0.0;
    for (double lam : all_eigenvalues(A)) acc += phi(lam);
    per_sample[static_cast<std::size_t>(s)] = acc / vol;
  });

  SmoothedValue out;
  out.samples = samples;
  out.dof = dof;
  double mean = 0.0;
  for (double v : per_sample) mean += v;
  mean /= static_cast<double>(samples);
  out.value = mean;
  if (samples >= 2) {
    double ss = 0.0;
    for (double v : per_sample) ss += (v - mean) * (v - mean);
    out.stderr_ = std::sqrt(ss / (static_cast<double>(samples) *
                                  static_cast<double>(samples - 1)));
  }
  return out;
}

double pair_against_curve(const TestFunction& phi, const IdsCurve& curve,
                          double step) {
  if (step <= 0.0) step = phi.sigma / 40.0;
  double a = std::max(phi.support_lo(), 0.0);
  double b = phi.support_hi();
  if (b <= a) return 0.0;
  long n = std::max<long>(2, static_cast<long>(std::ceil((b - a) / step)));
  double hh = (b - a) / static_cast<double>(n);
  auto f = [&](double E) { return -phi.deriv(E) * curve.value_at(E); };
  double acc = 0.5 * (f(a) + f(b));
  for (long i = 1; i < n; ++i) acc += f(a + hh * static_cast<double>(i));
  return acc * hh;
}

}  // namespace idslab
