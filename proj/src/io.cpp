#include "idslab/io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "idslab/errors.hpp"

namespace idslab {

namespace {

void write_json_sidecar(const IdsCurve& curve,
                        const std::filesystem::path& csv_path) {
  nlohmann::json j;
  j["method"] = curve.meta.method;
  j["bc"] = curve.meta.bc;
  j["d"] = curve.meta.d;
  j["m"] = curve.meta.m;
  j["extent"] = curve.meta.extent;
  j["samples"] = curve.meta.samples;
  j["seed"] = curve.meta.seed;
  j["theta_nodes"] = curve.meta.theta_nodes;
  j["points"] = curve.energies.size();
  j["csv"] = csv_path.filename().string();
  if (!curve.meta.spec_json.empty())
    j["spec"] = nlohmann::json::parse(curve.meta.spec_json);
  std::filesystem::path side = csv_path;
  side.replace_extension(".json");
  std::ofstream out(side);
  if (!out) throw ConfigError("cannot write " + side.string());
  out << j.dump(2) << "\n";
}

}  // namespace

std::filesystem::path write_curve_csv(const IdsCurve& curve,
                                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ostringstream name;
  name << curve.meta.method << "-" << curve.meta.d << "d-n" << curve.meta.extent
       << "-s" << curve.meta.seed << ".csv";
  std::filesystem::path csv = dir / name.str();
  std::ofstream out(csv);
  if (!out) throw ConfigError("cannot write " + csv.string());
  out << "E,N,stderr\n" << std::setprecision(17);
  for (std::size_t i = 0; i < curve.energies.size(); ++i)
    out << curve.energies[i] << "," << curve.values[i] << ","
        << (curve.stderrs.empty() ? 0.0 : curve.stderrs[i]) << "\n";
  write_json_sidecar(curve, csv);
  return csv;
}

IdsCurve read_curve_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open " + csv.string());
  IdsCurve c;
  std::string line;
  if (!std::getline(in, line) || line.rfind("E,N,stderr", 0) != 0)
    throw ConfigError("not a curve file: " + csv.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double v[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(row, cell, ','))
        throw ConfigError("short row in " + csv.string());
      v[i] = std::stod(cell);
    }
    c.energies.push_back(v[0]);
    c.values.push_back(v[1]);
    c.stderrs.push_back(v[2]);
  }
  if (c.energies.empty()) throw ConfigError("empty curve: " + csv.string());
  return c;
}

void write_field_csv(const FieldOnGrid& field, std::ostream& out) {
  out << std::setprecision(17);
  int C = field.cells_per_axis();
  double h = 1.0 / field.m;
  if (field.d == 1) {
    out << "x,value\n";
    for (int cx = 0; cx < C; ++cx)
      out << (cx + 0.5) * h << "," << field.at(cx) << "\n";
  } else {
    out << "x,y,value\n";
    for (int cy = 0; cy < C; ++cy)
      for (int cx = 0; cx < C; ++cx)
        out << (cx + 0.5) * h << "," << (cy + 0.5) * h << ","
            << field.at(cx, cy) << "\n";
  }
}

namespace {

struct BinaryHeader {
  char magic[4];
  std::uint16_t version;
  std::uint16_t d;
  std::uint32_t m;
  std::uint32_t extent;
};
static_assert(sizeof(BinaryHeader) == 16);

}  // namespace

void write_field_binary(const FieldOnGrid& field, std::ostream& out) {
  BinaryHeader hd{};
  std::memcpy(hd.magic, "IDSF", 4);
  hd.version = 1;
  hd.d = static_cast<std::uint16_t>(field.d);
  hd.m = static_cast<std::uint32_t>(field.m);
  hd.extent = static_cast<std::uint32_t>(field.extent);
  out.write(reinterpret_cast<const char*>(&hd), sizeof(hd));
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!out) throw ConfigError("binary field write failed");
}

FieldOnGrid read_field_binary(std::istream& in) {
  BinaryHeader hd{};
  in.read(reinterpret_cast<char*>(&hd), sizeof(hd));
  if (!in || std::memcmp(hd.magic, "IDSF", 4) != 0)
    throw ConfigError("not a field dump (bad magic)");
  if (hd.version != 1)
    throw ConfigError("unsupported field dump version " +
                      std::to_string(hd.version));
  FieldOnGrid f;
  f.d = hd.d;
  f.m = static_cast<int>(hd.m);
  f.extent = static_cast<int>(hd.extent);
  f.kind = FieldKind::realized;
  long total = f.cell_count();
  f.values.resize(static_cast<std::size_t>(total));
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw ConfigError("truncated field dump");
  double lo = 1e300, hi = -1e300;
  for (double v : f.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  f.lower = lo;
  f.upper = hi;
  return f;
}

void write_matrix_csv(const StiffnessMatrix& A, std::ostream& out) {
  out << "row,col,re,im\n" << std::setprecision(17);
  auto S = A.sparse();
  for (int k = 0; k < S.outerSize(); ++k)
    for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(S, k); it;
         ++it)
      out << it.row() << "," << it.col() << "," << it.value().real() << ","
          << it.value().imag() << "\n";
}

}  // namespace idslab
