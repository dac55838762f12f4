#include "idslab/discretize.hpp"

#include <cmath>
#include <sstream>

#include "idslab/errors.hpp"

namespace idslab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool phase_trivial(double phi) {
  double r = std::remainder(phi, kTwoPi);
  return r == 0.0;
}

}  // namespace

const char* BoundaryCondition::name() const {
  switch (kind) {
    case BcKind::dirichlet: return "dirichlet";
    case BcKind::neumann: return "neumann";
    case BcKind::periodic: return "periodic";
    case BcKind::floquet: return "floquet";
  }
  return "?";
}

bool StiffnessMatrix::is_complex() const {
  for (const auto& e : edges)
    if (!phase_trivial(e.phase)) return true;
  for (const auto& s : self_edges)
    if (!phase_trivial(s.phase)) return true;
  return false;
}

double StiffnessMatrix::norm_bound() const {
  std::vector<double> row(static_cast<std::size_t>(n_dof()), 0.0);
  double inv_h2 = 1.0 / (h * h);
  // Row sum of absolute values: diagonal (positive) plus off-diagonal moduli.
  for (const auto& e : edges) {
    double k = e.kappa * inv_h2;
    row[static_cast<std::size_t>(e.a)] += 2.0 * k;
    row[static_cast<std::size_t>(e.b)] += 2.0 * k;
  }
  for (const auto& s : half_edges) row[static_cast<std::size_t>(s.a)] += s.kappa * inv_h2;
  for (const auto& s : self_edges) {
    double c = std::cos(s.phase);
    row[static_cast<std::size_t>(s.a)] += s.kappa * inv_h2 * (2.0 - 2.0 * c);
  }
  double m = 0.0;
  for (double r : row) m = std::max(m, r);
  return m;
}

Eigen::SparseMatrix<std::complex<double>> StiffnessMatrix::sparse() const {
  using T = Eigen::Triplet<std::complex<double>>;
  std::vector<T> trip;
  trip.reserve(4 * edges.size() + half_edges.size() + self_edges.size());
  double inv_h2 = 1.0 / (h * h);
  for (const auto& e : edges) {
    double k = e.kappa * inv_h2;
    std::complex<double> off =
        -k * std::complex<double>(std::cos(e.phase), std::sin(e.phase));
    trip.emplace_back(e.a, e.a, k);
    trip.emplace_back(e.b, e.b, k);
    trip.emplace_back(e.a, e.b, off);
    trip.emplace_back(e.b, e.a, std::conj(off));
  }
  for (const auto& s : half_edges)
    trip.emplace_back(s.a, s.a, s.kappa * inv_h2);
  for (const auto& s : self_edges) {
    double c = std::cos(s.phase);
    trip.emplace_back(s.a, s.a, s.kappa * inv_h2 * (2.0 - 2.0 * c));
  }
  Eigen::SparseMatrix<std::complex<double>> A(n_dof(), n_dof());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

Eigen::MatrixXcd StiffnessMatrix::dense(long cap) const {
  if (n_dof() > cap)
    throw ComputeError("dense assembly refused: " + std::to_string(n_dof()) +
                       " unknowns exceed the cap " + std::to_string(cap));
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n_dof(), n_dof());
  double inv_h2 = 1.0 / (h * h);
  for (const auto& e : edges) {
    double k = e.kappa * inv_h2;
    std::complex<double> off =
        -k * std::complex<double>(std::cos(e.phase), std::sin(e.phase));
    A(e.a, e.a) += k;
    A(e.b, e.b) += k;
    A(e.a, e.b) += off;
    A(e.b, e.a) += std::conj(off);
  }
  for (const auto& s : half_edges) A(s.a, s.a) += s.kappa * inv_h2;
  for (const auto& s : self_edges)
    A(s.a, s.a) += s.kappa * inv_h2 * (2.0 - 2.0 * std::cos(s.phase));
  return A;
}

Eigen::MatrixXd StiffnessMatrix::dense_real(long cap) const {
  if (is_complex())
    throw ComputeError("dense_real on a twisted operator with nontrivial phase");
  Eigen::MatrixXcd A = dense(cap);
  return A.real();
}

void StiffnessMatrix::multiply(std::span<const std::complex<double>> x,
                               std::span<std::complex<double>> y) const {
  if (static_cast<long>(x.size()) != n_dof() ||
      static_cast<long>(y.size()) != n_dof())
    throw ComputeError("multiply: size mismatch");
  double inv_h2 = 1.0 / (h * h);
  for (auto& v : y) v = 0.0;
  for (const auto& e : edges) {
    double k = e.kappa * inv_h2;
    std::complex<double> ph(std::cos(e.phase), std::sin(e.phase));
    y[static_cast<std::size_t>(e.a)] +=
        k * (x[static_cast<std::size_t>(e.a)] -
             ph * x[static_cast<std::size_t>(e.b)]);
    y[static_cast<std::size_t>(e.b)] +=
        k * (x[static_cast<std::size_t>(e.b)] -
             std::conj(ph) * x[static_cast<std::size_t>(e.a)]);
  }
  for (const auto& s : half_edges)
    y[static_cast<std::size_t>(s.a)] +=
        s.kappa * inv_h2 * x[static_cast<std::size_t>(s.a)];
  for (const auto& s : self_edges)
    y[static_cast<std::size_t>(s.a)] += s.kappa * inv_h2 *
                                        (2.0 - 2.0 * std::cos(s.phase)) *
                                        x[static_cast<std::size_t>(s.a)];
}

namespace {

struct AxisLayout {
  int npts = 0;    // unknowns along this axis
  int offset = 0;  // vertex index of unknown 0 on the full vertex grid
  bool wraps = false;
};

AxisLayout axis_layout(BcKind kind, int C) {
  switch (kind) {
    case BcKind::dirichlet: return {C - 1, 1, false};
    case BcKind::neumann: return {C + 1, 0, false};
    case BcKind::periodic:
    case BcKind::floquet: return {C, 0, true};
  }
  return {};
}

}  // namespace

StiffnessMatrix assemble(const FieldOnGrid& field, const BoundaryCondition& bc) {
  if (!(field.lower > 0.0) || !std::isfinite(field.upper))
    throw DomainError("assemble requires a strictly positive finite field");
  bool wraps = bc.kind == BcKind::periodic || bc.kind == BcKind::floquet;
  if (wraps && field.kind == FieldKind::realized)
    throw AssemblyError(
        "periodic/twisted boundary conditions need a field that is periodic "
        "over the box; periodize the draw first");
  if (bc.kind == BcKind::floquet)
    for (int a = 0; a < field.d; ++a)
      if (!std::isfinite(bc.theta[static_cast<std::size_t>(a)]))
        throw ConfigError("non-finite twist angle");

  int C = field.cells_per_axis();
  AxisLayout ax = axis_layout(bc.kind, C);
  if (ax.npts < 1)
    throw ConfigError("no interior unknowns: the box needs at least 2 cells "
                      "per axis under dirichlet conditions");

  StiffnessMatrix A;
  A.d = field.d;
  A.h = 1.0 / field.m;
  A.bc = bc;
  {
    std::ostringstream p;
    p << "field kind=" << static_cast<int>(field.kind) << " d=" << field.d
      << " m=" << field.m << " extent=" << field.extent << " bc=" << bc.name();
    A.provenance = p.str();
  }

  auto wrap_row = [&](long r) {
    long w = r % C;
    return w < 0 ? w + C : w;
  };
  auto clamp_row = [&](long r) {
    return r < 0 ? 0L : (r >= C ? C - 1L : r);
  };
  // Transverse coefficient for an edge along one axis whose midpoint sits on
  // the line/face at vertex coordinate v of the other axis: mean of the two
  // touching cell rows, wrapped or clamped by the boundary condition.
  auto face_rows = [&](long v, long* r0, long* r1) {
    if (ax.wraps) {
      *r0 = wrap_row(v - 1);
      *r1 = wrap_row(v);
    } else {
      *r0 = clamp_row(v - 1);
      *r1 = clamp_row(v);
    }
  };

  if (field.d == 1) {
    A.npts = {ax.npts, 1};
    double tx = bc.kind == BcKind::floquet ? bc.theta[0] : 0.0;
    if (ax.wraps && C == 1) {
      A.self_edges.push_back({0, field.at(0), tx});
      return A;
    }
    // Interior edges between consecutive unknowns; the midpoint of vertex
    // pair (v, v+1) is the center of cell v.
    for (int j = 0; j + 1 < ax.npts; ++j) {
      long v = ax.offset + j;
      A.edges.push_back({j, j + 1, field.at(v), 0.0});
    }
    if (ax.wraps) {
      A.edges.push_back({ax.npts - 1, 0, field.at(C - 1), tx});
    } else if (bc.kind == BcKind::dirichlet) {
      A.half_edges.push_back({0, field.at(0)});
      A.half_edges.push_back({ax.npts - 1, field.at(C - 1)});
    }
    return A;
  }

  // d == 2: unknown (jx, jy) has flat index jy*npts + jx; both axes share the
  // same boundary condition and cell count.
  int M = ax.npts;
  A.npts = {M, M};
  double tx = bc.kind == BcKind::floquet ? bc.theta[0] : 0.0;
  double ty = bc.kind == BcKind::floquet ? bc.theta[1] : 0.0;
  auto id = [&](int jx, int jy) { return jy * M + jx; };
  auto face_kappa_x = [&](long cx, long vy) {
    long r0, r1;
    face_rows(vy, &r0, &r1);
    return 0.5 * (field.at(cx, r0) + field.at(cx, r1));
  };
  auto face_kappa_y = [&](long vx, long cy) {
    long r0, r1;
    face_rows(vx, &r0, &r1);
    return 0.5 * (field.at(r0, cy) + field.at(r1, cy));
  };

  if (ax.wraps && C == 1) {
    A.self_edges.push_back({0, field.at(0, 0), tx});
    A.self_edges.push_back({0, field.at(0, 0), ty});
    return A;
  }

  for (int jy = 0; jy < M; ++jy) {
    long vy = ax.offset + jy;  // vertex y-coordinate of this row of unknowns
    for (int jx = 0; jx + 1 < M; ++jx) {
      long cx = ax.offset + jx;  // cell column between vertices vx, vx+1
      A.edges.push_back({id(jx, jy), id(jx + 1, jy), face_kappa_x(cx, vy), 0.0});
    }
    if (ax.wraps)
      A.edges.push_back({id(M - 1, jy), id(0, jy), face_kappa_x(C - 1, vy), tx});
    else if (bc.kind == BcKind::dirichlet) {
      A.half_edges.push_back({id(0, jy), face_kappa_x(0, vy)});
      A.half_edges.push_back({id(M - 1, jy), face_kappa_x(C - 1, vy)});
    }
  }
  for (int jx = 0; jx < M; ++jx) {
    long vx = ax.offset + jx;
    for (int jy = 0; jy + 1 < M; ++jy) {
      long cy = ax.offset + jy;
      A.edges.push_back({id(jx, jy), id(jx, jy + 1), face_kappa_y(vx, cy), 0.0});
    }
    if (ax.wraps)
      A.edges.push_back({id(jx, M - 1), id(jx, 0), face_kappa_y(vx, C - 1), ty});
    else if (bc.kind == BcKind::dirichlet) {
      A.half_edges.push_back({id(jx, 0), face_kappa_y(vx, 0)});
      A.half_edges.push_back({id(jx, M - 1), face_kappa_y(vx, C - 1)});
    }
  }
  return A;
}

double quadratic_form(const StiffnessMatrix& A,
                      std::span<const std::complex<double>> u) {
  if (static_cast<long>(u.size()) != A.n_dof())
    throw ComputeError("quadratic_form: size mismatch");
  double inv_h2 = 1.0 / (A.h * A.h);
  double q = 0.0;
  for (const auto& e : A.edges) {
    std::complex<double> ph(std::cos(e.phase), std::sin(e.phase));
    std::complex<double> diff = u[static_cast<std::size_t>(e.a)] -
                                ph * u[static_cast<std::size_t>(e.b)];
    q += e.kappa * inv_h2 * std::norm(diff);
  }
  for (const auto& s : A.half_edges)
    q += s.kappa * inv_h2 * std::norm(u[static_cast<std::size_t>(s.a)]);
  for (const auto& s : A.self_edges) {
    std::complex<double> ph(std::cos(s.phase), std::sin(s.phase));
    q += s.kappa * inv_h2 *
         std::norm((1.0 - ph) * u[static_cast<std::size_t>(s.a)]);
  }
  return q;
}

}  // namespace idslab
