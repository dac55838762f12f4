#include "idslab/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "idslab/errors.hpp"
#include "idslab/rng.hpp"

namespace idslab {

namespace {

bool finite(double x) { return std::isfinite(x); }

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty number in list: " + text);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
    if (pos != item.size()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Profile syntax: "const:v" | "step:v1,v2" | "array:v1,...".
std::vector<double> parse_profile(const std::string& text, int d, int m,
                                  const std::string& key) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError(key + ": expected const:/step:/array: prefix, got '" +
                      text + "'");
  std::string head = trim(text.substr(0, colon));
  std::vector<double> nums = parse_numbers(text.substr(colon + 1));
  long total = 1;
  for (int a = 0; a < d; ++a) total *= m;

  std::vector<double> values(static_cast<std::size_t>(total));
  if (head == "const") {
    if (nums.size() != 1) throw ConfigError(key + ": const takes one value");
    std::fill(values.begin(), values.end(), nums[0]);
  } else if (head == "step") {
    // Two-phase along x: first half of the sub-cells per period.
    if (nums.size() != 2) throw ConfigError(key + ": step takes two values");
    for (long i = 0; i < total; ++i) {
      long sx = i % m;
      values[static_cast<std::size_t>(i)] = (sx < m / 2) ? nums[0] : nums[1];
    }
  } else if (head == "array") {
    if (static_cast<long>(nums.size()) != total)
      throw ConfigError(key + ": array needs " + std::to_string(total) +
                        " values, got " + std::to_string(nums.size()));
    values = nums;
  } else {
    throw ConfigError(key + ": unknown profile kind '" + head + "'");
  }
  return values;
}

}  // namespace

// ---- DisorderLaw -------------------------------------------------------------

double DisorderLaw::mean() const {
  if (kind == Kind::bernoulli) return (1.0 - p) * v0 + p * v1;
  return 0.5 * (v0 + v1);
}

double DisorderLaw::variance() const {
  if (kind == Kind::bernoulli) {
    double d = v1 - v0;
    return p * (1.0 - p) * d * d;
  }
  double d = v1 - v0;
  return d * d / 12.0;
}

double DisorderLaw::lo() const { return std::min(v0, v1); }
double DisorderLaw::hi() const { return std::max(v0, v1); }

bool DisorderLaw::degenerate() const {
  if (kind == Kind::bernoulli) return p == 0.0 || p == 1.0 || v0 == v1;
  return v0 == v1;
}

double DisorderLaw::draw(double u) const {
  if (kind == Kind::bernoulli) return u < p ? v1 : v0;
  return v0 + u * (v1 - v0);
}

double DisorderLaw::mean_reciprocal_of(double base, double amp) const {
  auto check = [&](double w) {
    if (base + w * amp <= 0.0)
      throw DomainError("reciprocal mean undefined: base + w*amp <= 0 at w = " +
                        std::to_string(w));
  };
  check(lo());
  check(hi());
  if (kind == Kind::bernoulli)
    return (1.0 - p) / (base + v0 * amp) + p / (base + v1 * amp);
  double width = (v1 - v0) * amp;
  if (std::abs(width) < 1e-14 * std::abs(base))
    return 1.0 / (base + 0.5 * (v0 + v1) * amp);
  return std::log((base + v1 * amp) / (base + v0 * amp)) / width;
}

std::string DisorderLaw::describe() const {
  std::ostringstream out;
  if (kind == Kind::bernoulli)
    out << "bernoulli:" << p << "," << v0 << "," << v1;
  else
    out << "uniform:" << v0 << "," << v1;
  return out.str();
}

DisorderLaw DisorderLaw::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("disorder: expected bernoulli:p,v0,v1 or uniform:a,b, got '" +
                      text + "'");
  std::string head = trim(text.substr(0, colon));
  std::vector<double> nums = parse_numbers(text.substr(colon + 1));
  DisorderLaw law;
  if (head == "bernoulli") {
    if (nums.size() != 3)
      throw ConfigError("disorder: bernoulli takes p,v0,v1");
    law.kind = Kind::bernoulli;
    law.p = nums[0];
    law.v0 = nums[1];
    law.v1 = nums[2];
    if (!(law.p >= 0.0 && law.p <= 1.0))
      throw ConfigError("disorder: bernoulli p must lie in [0,1]");
  } else if (head == "uniform") {
    if (nums.size() != 2) throw ConfigError("disorder: uniform takes a,b");
    law.kind = Kind::uniform;
    law.v0 = nums[0];
    law.v1 = nums[1];
    if (!(law.v0 <= law.v1))
      throw ConfigError("disorder: uniform needs a <= b");
  } else {
    throw ConfigError("disorder: unknown law '" + head + "'");
  }
  for (double v : {law.v0, law.v1})
    if (!finite(v)) throw ConfigError("disorder: non-finite support value");
  return law;
}

// ---- CoefficientSpec -----------------------------------------------------------

long CoefficientSpec::cells_per_period() const {
  long total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  return total;
}

void CoefficientSpec::finalize() {
  if (d != 1 && d != 2) throw ConfigError("d must be 1 or 2");
  if (m < 1) throw ConfigError("m must be >= 1");
  long total = cells_per_period();
  if (static_cast<long>(rho_plus.size()) != total)
    throw ConfigError("rho_plus needs " + std::to_string(total) + " values");
  if (static_cast<long>(rho_bump.size()) != total)
    throw ConfigError("rho_bump needs " + std::to_string(total) + " values");
  if (law.kind == DisorderLaw::Kind::bernoulli &&
      !(law.p >= 0.0 && law.p <= 1.0))
    throw ConfigError("bernoulli p must lie in [0,1]");
  if (law.kind == DisorderLaw::Kind::uniform && !(law.v0 <= law.v1))
    throw ConfigError("uniform law needs a <= b");

  double lo = 1e300, hi = -1e300;
  for (long i = 0; i < total; ++i) {
    double p = rho_plus[static_cast<std::size_t>(i)];
    double b = rho_bump[static_cast<std::size_t>(i)];
    if (!finite(p) || !finite(b))
      throw ConfigError("non-finite profile value at cell " + std::to_string(i));
    if (b < 0.0)
      throw ConfigError("rho_bump must be >= 0 at cell " + std::to_string(i) +
                        " (got " + std::to_string(b) + ")");
    double cell_lo = p + std::min(law.lo() * b, law.hi() * b);
    double cell_hi = p + std::max(law.lo() * b, law.hi() * b);
    if (cell_lo <= 0.0)
      throw ConfigError("ellipticity violated: rho can reach " +
                        std::to_string(cell_lo) + " <= 0 at cell " +
                        std::to_string(i));
    lo = std::min(lo, cell_lo);
    hi = std::max(hi, cell_hi);
  }
  rho_lower = lo;
  rho_upper = hi;
}

std::string CoefficientSpec::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["m"] = m;
  j["rho_plus"] = rho_plus;
  j["rho_bump"] = rho_bump;
  j["disorder"] = law.describe();
  j["rho_lower"] = rho_lower;
  j["rho_upper"] = rho_upper;
  return j.dump();
}

CoefficientSpec CoefficientSpec::from_text(const std::string& text) {
  int d = 1, m = 8;
  std::string plus_text = "const:1.0", bump_text = "const:0.0",
              law_text = "bernoulli:0.5,0,1";
  bool saw_plus = false, saw_bump = false, saw_law = false;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "d") {
      d = std::stoi(value);
    } else if (key == "m") {
      m = std::stoi(value);
    } else if (key == "rho_plus") {
      plus_text = value;
      saw_plus = true;
    } else if (key == "rho_bump") {
      bump_text = value;
      saw_bump = true;
    } else if (key == "disorder") {
      law_text = value;
      saw_law = true;
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
  }
  if (!saw_plus) throw ConfigError("missing required key rho_plus");
  if (!saw_bump) throw ConfigError("missing required key rho_bump");
  if (!saw_law) throw ConfigError("missing required key disorder");

  CoefficientSpec spec;
  spec.d = d;
  spec.m = m;
  if (d != 1 && d != 2) throw ConfigError("d must be 1 or 2");
  if (m < 1) throw ConfigError("m must be >= 1");
  spec.rho_plus = parse_profile(plus_text, d, m, "rho_plus");
  spec.rho_bump = parse_profile(bump_text, d, m, "rho_bump");
  spec.law = DisorderLaw::parse(law_text);
  spec.finalize();
  return spec;
}

CoefficientSpec CoefficientSpec::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open spec file: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

// ---- realizations and fields ---------------------------------------------------

long Realization::cells() const {
  long total = 1;
  for (int a = 0; a < d; ++a) total *= extent;
  return total;
}

Realization draw_realization(const CoefficientSpec& spec, int extent,
                             std::uint64_t seed, std::uint64_t sample_index) {
  if (extent < 1) throw ConfigError("extent must be >= 1");
  Realization r;
  r.d = spec.d;
  r.extent = extent;
  r.seed = seed;
  r.sample_index = sample_index;
  long total = r.cells();
  r.omega.resize(static_cast<std::size_t>(total));
  for (long i = 0; i < total; ++i)
    r.omega[static_cast<std::size_t>(i)] =
        spec.law.draw(rng::uniform(seed, sample_index,
                                   static_cast<std::uint64_t>(i)));
  return r;
}

namespace {

FieldOnGrid evaluate_field(const CoefficientSpec& spec, const Realization& r,
                           FieldKind kind) {
  if (r.d != spec.d)
    throw AssemblyError("realization dimension does not match the spec");
  FieldOnGrid f;
  f.d = spec.d;
  f.m = spec.m;
  f.extent = r.extent;
  f.kind = kind;
  int C = f.cells_per_axis();
  long total = (spec.d == 1) ? C : static_cast<long>(C) * C;
  f.values.resize(static_cast<std::size_t>(total));

  double lo = 1e300, hi = -1e300;
  auto put = [&](long idx, long period_idx, long cell_idx) {
    double v = spec.rho_plus[static_cast<std::size_t>(period_idx)] +
               r.omega[static_cast<std::size_t>(cell_idx)] *
                   spec.rho_bump[static_cast<std::size_t>(period_idx)];
    if (!std::isfinite(v) || v < spec.rho_lower - 1e-12 ||
        v > spec.rho_upper + 1e-12)
      throw DomainError("field sample " + std::to_string(v) + " at cell " +
                        std::to_string(idx) + " escapes the bounds [" +
                        std::to_string(spec.rho_lower) + ", " +
                        std::to_string(spec.rho_upper) + "]");
    f.values[static_cast<std::size_t>(idx)] = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };

  if (spec.d == 1) {
    for (long cx = 0; cx < C; ++cx)
      put(cx, cx % spec.m, cx / spec.m);
  } else {
    for (long cy = 0; cy < C; ++cy)
      for (long cx = 0; cx < C; ++cx) {
        long period_idx = (cy % spec.m) * spec.m + (cx % spec.m);
        long cell_idx = (cy / spec.m) * r.extent + (cx / spec.m);
        put(cy * C + cx, period_idx, cell_idx);
      }
  }
  f.lower = lo;
  f.upper = hi;
  return f;
}

}  // namespace

FieldOnGrid sample_field(const CoefficientSpec& spec, const Realization& r) {
  return evaluate_field(spec, r, FieldKind::realized);
}

FieldOnGrid sample_field(const CoefficientSpec& spec, int extent,
                         std::uint64_t seed, std::uint64_t sample_index) {
  return sample_field(spec, draw_realization(spec, extent, seed, sample_index));
}

FieldOnGrid periodize(const CoefficientSpec& spec, const Realization& r) {
  // Bumps live inside their own unit cell, so repeating the box pattern
  // changes no value on the box itself: the periodized field reuses the
  // realized values and only upgrades the declared kind.
  return evaluate_field(spec, r, FieldKind::periodized);
}

FieldOnGrid mean_field(const CoefficientSpec& spec, bool harmonic) {
  return mean_field_on_box(spec, 1, harmonic);
}

FieldOnGrid mean_field_on_box(const CoefficientSpec& spec, int extent,
                              bool harmonic) {
  if (extent < 1) throw ConfigError("extent must be >= 1");
  FieldOnGrid f;
  f.d = spec.d;
  f.m = spec.m;
  f.extent = extent;
  f.kind = FieldKind::homogenized;
  int C = f.cells_per_axis();
  long total = (spec.d == 1) ? C : static_cast<long>(C) * C;
  f.values.resize(static_cast<std::size_t>(total));

  long per = spec.cells_per_period();
  std::vector<double> period(static_cast<std::size_t>(per));
  double wbar = spec.law.mean();
  for (long i = 0; i < per; ++i) {
    double p = spec.rho_plus[static_cast<std::size_t>(i)];
    double b = spec.rho_bump[static_cast<std::size_t>(i)];
    period[static_cast<std::size_t>(i)] =
        harmonic ? 1.0 / spec.law.mean_reciprocal_of(p, b) : p + wbar * b;
  }

  double lo = 1e300, hi = -1e300;
  auto put = [&](long idx, long period_idx) {
    double v = period[static_cast<std::size_t>(period_idx)];
    f.values[static_cast<std::size_t>(idx)] = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  if (spec.d == 1) {
    for (long cx = 0; cx < C; ++cx) put(cx, cx % spec.m);
  } else {
    for (long cy = 0; cy < C; ++cy)
      for (long cx = 0; cx < C; ++cx)
        put(cy * C + cx, (cy % spec.m) * spec.m + (cx % spec.m));
  }
  f.lower = lo;
  f.upper = hi;
  return f;
}

FieldOnGrid reciprocal_field(const FieldOnGrid& field) {
  FieldOnGrid g = field;
  g.kind = FieldKind::reciprocal;
  double lo = 1e300, hi = -1e300;
  for (auto& v : g.values) {
    if (!(v > 0.0))
      throw DomainError("reciprocal of a non-positive field value " +
                        std::to_string(v));
    v = 1.0 / v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  g.lower = lo;
  g.upper = hi;
  return g;
}

long FieldOnGrid::cell_count() const {
  long total = 1;
  for (int a = 0; a < d; ++a) total *= cells_per_axis();
  return total;
}

}  // namespace idslab
