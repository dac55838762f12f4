// idslab: spectral statistics of random acoustic media on a lattice.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "idslab/coeff.hpp"
#include "idslab/discretize.hpp"
#include "idslab/errors.hpp"
#include "idslab/ids.hpp"
#include "idslab/io.hpp"
#include "idslab/lab.hpp"
#include "idslab/spectral.hpp"
#include "idslab/version.hpp"

namespace {

using namespace idslab;

struct GridSpec {
  double lo = 0.1, hi = 1.0;
  int count = 13;
};

// "lo:hi:count"
GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  auto c1 = text.find(':');
  auto c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ConfigError("grid must be lo:hi:count, got '" + text + "'");
  try {
    g.lo = std::stod(text.substr(0, c1));
    g.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    g.count = std::stoi(text.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("grid must be lo:hi:count, got '" + text + "'");
  }
  return g;
}

BoundaryCondition parse_bc(const std::string& name, double tx, double ty) {
  if (name == "dirichlet") return BoundaryCondition::Dirichlet();
  if (name == "neumann") return BoundaryCondition::Neumann();
  if (name == "periodic") return BoundaryCondition::Periodic();
  if (name == "floquet") return BoundaryCondition::Floquet(tx, ty);
  throw ConfigError("unknown boundary condition '" + name + "'");
}

std::filesystem::path resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("IDSLAB_OUT"); env && *env) return env;
  return ".";
}

int run_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    std::cout << (ok ? "ok" : "FAIL") << " - " << name << "\n";
    if (!ok) ++failures;
  };

  CoefficientSpec free1;
  free1.d = 1;
  free1.m = 16;
  free1.rho_plus.assign(16, 1.0);
  free1.rho_bump.assign(16, 0.0);
  free1.law = DisorderLaw::parse("bernoulli:0.5,0,1");
  free1.finalize();
  check(free1.rho_lower == 1.0 && free1.rho_upper == 1.0,
        "free medium has unit bounds");

  bool threw = false;
  try {
    CoefficientSpec::from_text("d = 1\nm = 2\nrho_plus = const:-1\n"
                               "rho_bump = const:0\ndisorder = uniform:0,1\n");
  } catch (const ConfigError&) {
    threw = true;
  }
  check(threw, "negative coefficient is rejected");

  FieldOnGrid f = sample_field(free1, 4, 7, 0);
  check(f.lower >= 1.0 - 1e-15 && f.upper <= 1.0 + 1e-15,
        "sampled field honors its bounds");

  FieldOnGrid fm = mean_field(free1);
  check(fm.values == std::vector<double>(16, 1.0), "mean field of free medium");

  StiffnessMatrix A = assemble(periodize(free1, draw_realization(free1, 4, 7, 0)),
                               BoundaryCondition::Periodic());
  std::vector<std::complex<double>> ones(static_cast<std::size_t>(A.n_dof()),
                                         1.0);
  check(quadratic_form(A, ones) == 0.0, "constants lie in the periodic kernel");

  StiffnessMatrix Af = assemble(fm, BoundaryCondition::Floquet(0.0));
  StiffnessMatrix Ap = assemble(fm, BoundaryCondition::Periodic());
  check(eigen_count(Af, 5.0) == eigen_count(Ap, 5.0),
        "zero twist equals periodic counting");

  IdsCurve c = floquet_ids(mean_field_on_box(free1, 8), {0.5}, 32);
  check(std::abs(c.values[0] - std::sqrt(0.5) / 3.14159265358979323846) < 0.005,
        "free counting at E=0.5 is near sqrt(E)/pi");

  LdRate lr = ld_rate(DisorderLaw::parse("bernoulli:0.5,0,1"), 1, 0.4);
  check(lr.probability == 1.0, "single-cell deviation is certain");

  ClopperPearson ci = clopper_pearson(0, 100);
  check(ci.lo == 0.0 && std::abs(ci.hi - 0.03621669264) < 1e-9,
        "exact interval for zero hits");

  std::vector<double> Es = geometric_grid(0.01, 1.0, 12), ps;
  for (double E : Es) ps.push_back(std::exp(-std::pow(E, -0.5)));
  TailFit fit = fit_tail(Es, ps);
  check(std::abs(fit.tau - 0.5) < 1e-10, "planted tail exponent is recovered");

  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral statistics of random acoustic media"};
  app.set_version_flag("--version", idslab::version);
  app.require_subcommand(1);

  std::string out_flag;
  int workers = 0;
  app.add_option("--out", out_flag, "output directory (or env IDSLAB_OUT)");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");

  // ---- sample-field ----
  auto* cmd_field = app.add_subcommand("sample-field",
                                       "draw one coefficient field");
  std::string field_spec;
  int field_extent = 1;
  std::uint64_t field_seed = 0, field_index = 0;
  bool field_binary = false, field_periodized = false;
  cmd_field->add_option("--spec", field_spec)->required();
  cmd_field->add_option("--extent", field_extent);
  cmd_field->add_option("--seed", field_seed);
  cmd_field->add_option("--index", field_index);
  cmd_field->add_flag("--binary", field_binary, "write the binary dump");
  cmd_field->add_flag("--periodized", field_periodized);

  // ---- bands ----
  auto* cmd_bands = app.add_subcommand("bands",
                                       "lowest twisted eigenvalues");
  std::string bands_spec;
  int bands_extent = 1, bands_count = 8;
  double bands_tx = 0.0, bands_ty = 0.0;
  bool bands_harmonic = false;
  cmd_bands->add_option("--spec", bands_spec)->required();
  cmd_bands->add_option("--extent", bands_extent);
  cmd_bands->add_option("--theta-x", bands_tx);
  cmd_bands->add_option("--theta-y", bands_ty);
  cmd_bands->add_option("--count", bands_count);
  cmd_bands->add_flag("--harmonic", bands_harmonic);

  // ---- ids ----
  auto* cmd_ids = app.add_subcommand("ids", "integrated counting curve");
  std::string ids_method = "fv", ids_spec, ids_bc = "dirichlet",
              ids_grid = "0.1:1.0:13";
  int ids_extent = 100, ids_theta = 0;
  long ids_samples = 50;
  std::uint64_t ids_seed = 1;
  bool ids_harmonic = false;
  cmd_ids->add_option("--method", ids_method, "fv | floquet | homog");
  cmd_ids->add_option("--spec", ids_spec)->required();
  cmd_ids->add_option("--bc", ids_bc,
                      "dirichlet | neumann | periodic (fv only)");
  cmd_ids->add_option("--grid", ids_grid, "lo:hi:count geometric");
  cmd_ids->add_option("--extent", ids_extent);
  cmd_ids->add_option("--samples", ids_samples);
  cmd_ids->add_option("--seed", ids_seed);
  cmd_ids->add_option("--theta-nodes", ids_theta, "0 = adaptive");
  cmd_ids->add_flag("--harmonic", ids_harmonic);

  // ---- homogenized ----
  auto* cmd_hom = app.add_subcommand("homogenized",
                                     "counting curve of the mean medium");
  std::string hom_spec, hom_grid = "0.1:1.0:13";
  int hom_theta = 0;
  bool hom_harmonic = false;
  cmd_hom->add_option("--spec", hom_spec)->required();
  cmd_hom->add_option("--grid", hom_grid);
  cmd_hom->add_option("--theta-nodes", hom_theta);
  cmd_hom->add_flag("--harmonic", hom_harmonic);

  // ---- sandwich ----
  auto* cmd_sw = app.add_subcommand("sandwich",
                                    "two-sided envelope check");
  std::string sw_spec, sw_grid = "0.02:0.2:16";
  double sw_alpha = 0.7, sw_tau = 0.5, sw_C = 1.0;
  int sw_extent = 400, sw_theta = 128;
  long sw_samples = 200;
  std::uint64_t sw_seed = 1;
  bool sw_nofit = false;
  cmd_sw->add_option("--spec", sw_spec)->required();
  cmd_sw->add_option("--grid", sw_grid);
  cmd_sw->add_option("--alpha", sw_alpha);
  cmd_sw->add_option("--tau", sw_tau);
  cmd_sw->add_option("--prefactor", sw_C);
  cmd_sw->add_option("--extent", sw_extent);
  cmd_sw->add_option("--samples", sw_samples);
  cmd_sw->add_option("--seed", sw_seed);
  cmd_sw->add_option("--theta-nodes", sw_theta);
  cmd_sw->add_flag("--no-fit", sw_nofit, "use the prefactor as given");

  // ---- approx-check ----
  auto* cmd_ap = app.add_subcommand("approx-check",
                                    "finite-volume bracket at one energy");
  std::string ap_spec;
  double ap_E = 0.1, ap_eps = 0.02, ap_eta = 1.0, ap_rho = 1.0;
  int ap_n = 16, ap_mid = 400, ap_theta = 16;
  long ap_samples = 200;
  std::uint64_t ap_seed = 1;
  cmd_ap->add_option("--spec", ap_spec)->required();
  cmd_ap->add_option("--energy", ap_E);
  cmd_ap->add_option("--eps", ap_eps);
  cmd_ap->add_option("--n", ap_n);
  cmd_ap->add_option("--samples", ap_samples);
  cmd_ap->add_option("--seed", ap_seed);
  cmd_ap->add_option("--eta", ap_eta);
  cmd_ap->add_option("--rho", ap_rho);
  cmd_ap->add_option("--mid-extent", ap_mid);
  cmd_ap->add_option("--theta-nodes", ap_theta);

  // ---- deviation ----
  auto* cmd_dev = app.add_subcommand("deviation",
                                     "low-mode deviation event probability");
  std::string dev_spec;
  int dev_n = 16;
  double dev_E = 0.05, dev_alpha = 0.6, dev_scale = 1.0;
  long dev_trials = 10000;
  std::uint64_t dev_seed = 1;
  cmd_dev->add_option("--spec", dev_spec)->required();
  cmd_dev->add_option("--n", dev_n);
  cmd_dev->add_option("--energy", dev_E);
  cmd_dev->add_option("--alpha", dev_alpha);
  cmd_dev->add_option("--trials", dev_trials);
  cmd_dev->add_option("--seed", dev_seed);
  cmd_dev->add_option("--scale", dev_scale);

  // ---- ld-rate ----
  auto* cmd_ld = app.add_subcommand("ld-rate",
                                    "deviation probability of the cell mean");
  std::string ld_law = "bernoulli:0.5,0,1";
  long ld_cells = 100;
  double ld_t = 0.2;
  cmd_ld->add_option("--law", ld_law);
  cmd_ld->add_option("--cells", ld_cells);
  cmd_ld->add_option("--t", ld_t);

  auto* cmd_self = app.add_subcommand("selftest", "quick invariant checks");
  (void)cmd_self;

  try {
    app.parse(argc, argv);
    std::filesystem::path out_dir = resolve_out(out_flag);

    if (app.got_subcommand("selftest")) return run_selftest();

    if (app.got_subcommand("sample-field")) {
      CoefficientSpec spec = CoefficientSpec::from_file(field_spec);
      Realization r = draw_realization(spec, field_extent, field_seed,
                                       field_index);
      FieldOnGrid f = field_periodized ? periodize(spec, r)
                                       : sample_field(spec, r);
      std::filesystem::create_directories(out_dir);
      std::ostringstream base;
      base << "field-" << spec.d << "d-n" << field_extent << "-s" << field_seed
           << "-i" << field_index;
      if (field_binary) {
        auto path = out_dir / (base.str() + ".bin");
        std::ofstream bin(path, std::ios::binary);
        write_field_binary(f, bin);
        std::cout << "wrote " << path.string() << "\n";
      } else {
        auto path = out_dir / (base.str() + ".csv");
        std::ofstream csv(path);
        write_field_csv(f, csv);
        std::cout << "wrote " << path.string() << "\n";
      }
      std::cout << "bounds [" << f.lower << ", " << f.upper << "] on "
                << f.cell_count() << " cells\n";
      return 0;
    }

    if (app.got_subcommand("bands")) {
      CoefficientSpec spec = CoefficientSpec::from_file(bands_spec);
      FieldOnGrid f = mean_field_on_box(spec, bands_extent, bands_harmonic);
      StiffnessMatrix A = assemble(f, BoundaryCondition::Floquet(bands_tx,
                                                                 bands_ty));
      SpectrumSlice s = lowest_eigenpairs(A, bands_count, false);
      std::cout << "theta = (" << bands_tx << ", " << bands_ty << ") method "
                << s.method << "\n";
      for (double lam : s.eigenvalues) std::cout << lam << "\n";
      return 0;
    }

    if (app.got_subcommand("ids")) {
      CoefficientSpec spec = CoefficientSpec::from_file(ids_spec);
      GridSpec g = parse_grid(ids_grid);
      std::vector<double> Es = geometric_grid(g.lo, g.hi, g.count);
      IdsCurve curve;
      if (ids_method == "fv") {
        curve = finite_volume_ids(spec, ids_extent, parse_bc(ids_bc, 0, 0), Es,
                                  ids_samples, ids_seed, workers);
      } else if (ids_method == "floquet") {
        Realization r = draw_realization(spec, ids_extent, ids_seed, 0);
        curve = floquet_ids(periodize(spec, r), Es, ids_theta, workers);
        curve.meta.seed = ids_seed;
        curve.meta.spec_json = spec.to_json();
      } else if (ids_method == "homog") {
        curve = homogenized_ids(spec, Es, ids_theta, ids_harmonic, workers);
      } else {
        throw ConfigError("unknown method '" + ids_method +
                          "' (use fv | floquet | homog)");
      }
      auto path = write_curve_csv(curve, out_dir);
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "N(" << Es.back() << ") = " << curve.values.back() << "\n";
      return 0;
    }

    if (app.got_subcommand("homogenized")) {
      CoefficientSpec spec = CoefficientSpec::from_file(hom_spec);
      GridSpec g = parse_grid(hom_grid);
      std::vector<double> Es = geometric_grid(g.lo, g.hi, g.count);
      IdsCurve curve = homogenized_ids(spec, Es, hom_theta, hom_harmonic,
                                       workers);
      auto path = write_curve_csv(curve, out_dir);
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "N(" << Es.back() << ") = " << curve.values.back() << "\n";
      return 0;
    }

    if (app.got_subcommand("sandwich")) {
      CoefficientSpec spec = CoefficientSpec::from_file(sw_spec);
      GridSpec g = parse_grid(sw_grid);
      std::vector<double> Es = geometric_grid(g.lo, g.hi, g.count);
      IdsCurve est = finite_volume_ids(spec, sw_extent,
                                       BoundaryCondition::Dirichlet(), Es,
                                       sw_samples, sw_seed, workers);
      // The reference must cover E + E^alpha; extend it past the top energy.
      double top = g.hi + std::pow(g.hi, sw_alpha);
      std::vector<double> ref_grid = geometric_grid(g.lo * 0.25, top * 1.05, 96);
      for (double E : Es) {
        ref_grid.push_back(E + std::pow(E, sw_alpha));
        double lower = E - std::pow(E, sw_alpha);
        if (lower > 0.0) ref_grid.push_back(lower);
      }
      std::sort(ref_grid.begin(), ref_grid.end());
      IdsCurve ref = homogenized_ids(spec, ref_grid, sw_theta, false, workers);
      SandwichParams params{sw_alpha, sw_tau, sw_C, !sw_nofit};
      SandwichReport rep = sandwich_check(est, ref, params);
      std::filesystem::create_directories(out_dir);
      auto path = out_dir / "sandwich.json";
      std::ofstream js(path);
      js << rep.to_json() << "\n";
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "C_final = " << rep.C_final << ", all_pass = "
                << (rep.all_pass ? "yes" : "no") << "\n";
      return rep.all_pass ? 0 : 1;
    }

    if (app.got_subcommand("approx-check")) {
      CoefficientSpec spec = CoefficientSpec::from_file(ap_spec);
      BracketReport rep = approximation_check(spec, ap_E, ap_eps, ap_n,
                                              ap_samples, ap_seed, ap_eta,
                                              ap_rho, ap_mid, ap_theta,
                                              workers);
      std::filesystem::create_directories(out_dir);
      auto path = out_dir / "bracket.json";
      std::ofstream js(path);
      js << rep.to_json() << "\n";
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "bracket [" << rep.inner - rep.slack << ", "
                << rep.outer + rep.slack << "] holds: "
                << ((rep.lower_ok && rep.upper_ok) ? "yes" : "no")
                << ", width = " << rep.width << "\n";
      return (rep.lower_ok && rep.upper_ok) ? 0 : 1;
    }

    if (app.got_subcommand("deviation")) {
      CoefficientSpec spec = CoefficientSpec::from_file(dev_spec);
      DeviationEstimate est = deviation_event_probability(
          spec, dev_n, dev_E, dev_alpha, dev_trials, dev_seed, dev_scale,
          workers);
      std::filesystem::create_directories(out_dir);
      auto path = out_dir / "deviation.json";
      std::ofstream js(path);
      js << est.to_json() << "\n";
      std::cout << "wrote " << path.string() << "\n";
      std::cout << "p_hat = " << est.p_hat << " in [" << est.ci_lo << ", "
                << est.ci_hi << "], dim = " << est.subspace_dim
                << ", ceiling/threshold = " << est.ceiling << "/"
                << est.threshold << "\n";
      return 0;
    }

    if (app.got_subcommand("ld-rate")) {
      DisorderLaw law = DisorderLaw::parse(ld_law);
      LdRate r = ld_rate(law, ld_cells, ld_t);
      std::cout << "P = " << r.probability << " (" << r.method
                << "), hoeffding = " << r.hoeffding_bound
                << ", rate/cell = " << r.rate_per_cell << "\n";
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
