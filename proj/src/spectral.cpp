#include "idslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "idslab/errors.hpp"
#include "idslab/rng.hpp"

namespace idslab {

namespace {

using cd = std::complex<double>;

// ---- chain extraction -------------------------------------------------------

// Scalar symmetric/Hermitian chain: tridiagonal plus an optional wrap entry in
// the (0, M-1) corner. Parallel edges (two-cell rings) accumulate into the
// same sub-diagonal slot, which keeps the matrix faithful.
struct ScalarChain {
  std::vector<double> diag;
  std::vector<cd> sub;  // sub[j] = A[j+1, j]
  cd corner01{0.0, 0.0};  // A[0, M-1], only when M >= 3
  double scale = 0.0;
};

// Block chain over the slow axis: block tridiagonal plus an optional wrap
// block column. Blocks are dense bs x bs.
struct BlockChain {
  int bs = 0;
  int nb = 0;
  std::vector<Eigen::MatrixXcd> diag;
  std::vector<Eigen::MatrixXcd> sub;  // sub[j] = A[block j+1, block j]
  Eigen::MatrixXcd corner01;          // A[block 0, block nb-1]
  bool has_corner = false;
  double scale = 0.0;
};

ScalarChain build_scalar_chain(const StiffnessMatrix& A) {
  long M = A.n_dof();
  ScalarChain c;
  c.diag.assign(static_cast<std::size_t>(M), 0.0);
  c.sub.assign(static_cast<std::size_t>(M > 0 ? M - 1 : 0), cd(0.0, 0.0));
  c.scale = A.norm_bound();
  double inv_h2 = 1.0 / (A.h * A.h);

  auto add_entry = [&](long p, long q, cd val) {
    if (p == q + 1) {
      c.sub[static_cast<std::size_t>(q)] += val;
    } else if (q == p + 1) {
      // upper entry; implied by Hermitian symmetry of the stored lower part
    } else if (p == 0 && q == M - 1 && M >= 3) {
      c.corner01 += val;
    } else if (p == M - 1 && q == 0 && M >= 3) {
      // conjugate of the stored corner
    } else {
      throw ComputeError("operator is not chain structured");
    }
  };

  for (const auto& e : A.edges) {
    double k = e.kappa * inv_h2;
    cd off = -k * cd(std::cos(e.phase), std::sin(e.phase));
    c.diag[static_cast<std::size_t>(e.a)] += k;
    c.diag[static_cast<std::size_t>(e.b)] += k;
    add_entry(e.a, e.b, off);
    add_entry(e.b, e.a, std::conj(off));
  }
  for (const auto& s : A.half_edges)
    c.diag[static_cast<std::size_t>(s.a)] += s.kappa * inv_h2;
  for (const auto& s : A.self_edges)
    c.diag[static_cast<std::size_t>(s.a)] +=
        s.kappa * inv_h2 * (2.0 - 2.0 * std::cos(s.phase));
  return c;
}

BlockChain build_block_chain(const StiffnessMatrix& A) {
  BlockChain c;
  c.bs = A.npts[0];
  c.nb = A.npts[1];
  if (c.bs > 4096)
    throw ComputeError("2D counting needs at most 4096 unknowns per row, got " +
                       std::to_string(c.bs));
  c.scale = A.norm_bound();
  c.diag.assign(static_cast<std::size_t>(c.nb),
                Eigen::MatrixXcd::Zero(c.bs, c.bs));
  c.sub.assign(static_cast<std::size_t>(c.nb - 1),
               Eigen::MatrixXcd::Zero(c.bs, c.bs));
  c.corner01 = Eigen::MatrixXcd::Zero(c.bs, c.bs);
  double inv_h2 = 1.0 / (A.h * A.h);

  auto add_entry = [&](long p, long q, cd val) {
    long bp = p / c.bs, bq = q / c.bs;
    long xp = p % c.bs, xq = q % c.bs;
    if (bp == bq) {
      c.diag[static_cast<std::size_t>(bp)](xp, xq) += val;
    } else if (bp == bq + 1) {
      c.sub[static_cast<std::size_t>(bq)](xp, xq) += val;
    } else if (bq == bp + 1) {
      // implied upper block
    } else if (bp == 0 && bq == c.nb - 1 && c.nb >= 3) {
      c.corner01(xp, xq) += val;
      c.has_corner = true;
    } else if (bp == c.nb - 1 && bq == 0 && c.nb >= 3) {
      // conjugate of the stored corner block
    } else {
      throw ComputeError("operator is not block-chain structured");
    }
  };

  for (const auto& e : A.edges) {
    double k = e.kappa * inv_h2;
    cd off = -k * cd(std::cos(e.phase), std::sin(e.phase));
    long da = e.a, db = e.b;
    c.diag[static_cast<std::size_t>(da / c.bs)](da % c.bs, da % c.bs) += k;
    c.diag[static_cast<std::size_t>(db / c.bs)](db % c.bs, db % c.bs) += k;
    add_entry(da, db, off);
    add_entry(db, da, std::conj(off));
  }
  for (const auto& s : A.half_edges) {
    long a = s.a;
    c.diag[static_cast<std::size_t>(a / c.bs)](a % c.bs, a % c.bs) +=
        s.kappa * inv_h2;
  }
  for (const auto& s : A.self_edges) {
    long a = s.a;
    c.diag[static_cast<std::size_t>(a / c.bs)](a % c.bs, a % c.bs) +=
        s.kappa * inv_h2 * (2.0 - 2.0 * std::cos(s.phase));
  }
  return c;
}

// ---- inertia of the shifted chain ---------------------------------------------

// Forward elimination with scalar pivots; the wrap entry is carried as a
// bordering column that is folded into the last pivot. Returns nothing when a
// pivot degenerates (exact singularity), in which case the caller retries at
// a slightly larger shift.
std::optional<long> scalar_chain_negatives(const ScalarChain& c, double sigma) {
  long M = static_cast<long>(c.diag.size());
  if (M == 1) {
    double d = c.diag[0] - sigma;
    if (d == 0.0 || !std::isfinite(d)) return std::nullopt;
    return d < 0.0 ? 1 : 0;
  }

  long neg = 0;
  double d = c.diag[0] - sigma;
  cd w = c.corner01;            // running border-column entry A[j, M-1]
  double s = c.diag[static_cast<std::size_t>(M - 1)] - sigma;
  bool has_w = std::norm(w) != 0.0;

  for (long j = 0; j <= M - 2; ++j) {
    if (j == M - 2) {
      w += std::conj(c.sub[static_cast<std::size_t>(j)]);
      has_w = true;
    }
    if (d == 0.0 || !std::isfinite(d)) return std::nullopt;
    if (d < 0.0) ++neg;
    if (has_w) s -= std::norm(w) / d;
    if (j < M - 2) {
      cd l = c.sub[static_cast<std::size_t>(j)];
      double dn = c.diag[static_cast<std::size_t>(j + 1)] - sigma -
                  std::norm(l) / d;
      if (has_w) w = -(l / d) * w;
      d = dn;
    }
  }
  if (s == 0.0 || !std::isfinite(s)) return std::nullopt;
  if (s < 0.0) ++neg;
  return neg;
}

template <class Mat>
long bk_negatives(const Mat& F, const std::vector<lapack_int>& ipiv) {
  long neg = 0;
  long n = F.rows();
  for (long k = 0; k < n;) {
    if (ipiv[static_cast<std::size_t>(k)] > 0) {
      if (std::real(F(k, k)) < 0.0) ++neg;
      ++k;
    } else {
      // 2x2 pivot stored at (k, k+1) with the off element in the lower part.
      double a = std::real(F(k, k));
      double cc = std::real(F(k + 1, k + 1));
      double b2 = std::norm(cd(F(k + 1, k)));
      double det = a * cc - b2;
      if (det < 0.0)
        neg += 1;
      else if (a + cc < 0.0)
        neg += 2;
      k += 2;
    }
  }
  return neg;
}

struct HermTraits {
  using Mat = Eigen::MatrixXcd;
  static lapack_int trf(Mat& A, std::vector<lapack_int>& ipiv) {
    return LAPACKE_zhetrf(LAPACK_COL_MAJOR, 'L',
                          static_cast<lapack_int>(A.rows()), A.data(),
                          static_cast<lapack_int>(A.rows()), ipiv.data());
  }
  static lapack_int trs(const Mat& A, const std::vector<lapack_int>& ipiv,
                        Mat& B) {
    return LAPACKE_zhetrs(LAPACK_COL_MAJOR, 'L',
                          static_cast<lapack_int>(A.rows()),
                          static_cast<lapack_int>(B.cols()), A.data(),
                          static_cast<lapack_int>(A.rows()), ipiv.data(),
                          B.data(), static_cast<lapack_int>(B.rows()));
  }
  static Mat adjoint(const Mat& A) { return A.adjoint(); }
};

struct SymTraits {
  using Mat = Eigen::MatrixXd;
  static lapack_int trf(Mat& A, std::vector<lapack_int>& ipiv) {
    return LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L',
                          static_cast<lapack_int>(A.rows()), A.data(),
                          static_cast<lapack_int>(A.rows()), ipiv.data());
  }
  static lapack_int trs(const Mat& A, const std::vector<lapack_int>& ipiv,
                        Mat& B) {
    return LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L',
                          static_cast<lapack_int>(A.rows()),
                          static_cast<lapack_int>(B.cols()), A.data(),
                          static_cast<lapack_int>(A.rows()), ipiv.data(),
                          B.data(), static_cast<lapack_int>(B.rows()));
  }
  static Mat adjoint(const Mat& A) { return A.transpose(); }
};

// Block forward elimination; Haynsworth additivity of inertia over the Schur
// complements. The wrap block column is carried alongside and folded into the
// final block, exactly as in the scalar path.
template <class Traits>
std::optional<long> block_chain_negatives_t(
    const std::vector<typename Traits::Mat>& diag,
    const std::vector<typename Traits::Mat>& sub,
    const typename Traits::Mat& corner01, bool has_corner, double sigma) {
  using Mat = typename Traits::Mat;
  int nb = static_cast<int>(diag.size());
  int bs = static_cast<int>(diag[0].rows());
  Mat I = Mat::Identity(bs, bs);

  long neg = 0;
  Mat D = diag[0] - sigma * I;
  Mat S = diag[static_cast<std::size_t>(nb - 1)] - sigma * I;
  Mat W;
  bool has_w = has_corner;
  if (has_corner) W = corner01;

  std::vector<lapack_int> ipiv(static_cast<std::size_t>(bs));
  for (int j = 0; j <= nb - 2; ++j) {
    if (j == nb - 2) {
      Mat up = Traits::adjoint(sub[static_cast<std::size_t>(j)]);
      if (has_w)
        W += up;
      else
        W = up;
      has_w = true;
    }
    Mat F = D;
    lapack_int info = Traits::trf(F, ipiv);
    if (info != 0) return std::nullopt;
    neg += bk_negatives(F, ipiv);

    Mat X2;
    if (has_w) {
      X2 = W;
      if (Traits::trs(F, ipiv, X2) != 0) return std::nullopt;
      S -= Traits::adjoint(W) * X2;
    }
    if (j < nb - 2) {
      const Mat& L = sub[static_cast<std::size_t>(j)];
      Mat X1 = Traits::adjoint(L);
      if (Traits::trs(F, ipiv, X1) != 0) return std::nullopt;
      D = diag[static_cast<std::size_t>(j + 1)] - sigma * I - L * X1;
      if (has_w) W = -(L * X2);
    }
  }
  Mat F = S;
  lapack_int info = Traits::trf(F, ipiv);
  if (info != 0) return std::nullopt;
  neg += bk_negatives(F, ipiv);
  return neg;
}

std::optional<long> block_chain_negatives(const BlockChain& c, double sigma,
                                          bool cplx) {
  if (c.nb == 1) {
    // Single block: plain dense inertia of the shifted block.
    if (cplx) {
      Eigen::MatrixXcd F =
          c.diag[0] - sigma * Eigen::MatrixXcd::Identity(c.bs, c.bs);
      std::vector<lapack_int> ipiv(static_cast<std::size_t>(c.bs));
      if (HermTraits::trf(F, ipiv) != 0) return std::nullopt;
      return bk_negatives(F, ipiv);
    }
    Eigen::MatrixXd F =
        c.diag[0].real() - sigma * Eigen::MatrixXd::Identity(c.bs, c.bs);
    std::vector<lapack_int> ipiv(static_cast<std::size_t>(c.bs));
    if (SymTraits::trf(F, ipiv) != 0) return std::nullopt;
    return bk_negatives(F, ipiv);
  }
  if (cplx)
    return block_chain_negatives_t<HermTraits>(c.diag, c.sub, c.corner01,
                                               c.has_corner, sigma);
  std::vector<Eigen::MatrixXd> diag, sub;
  diag.reserve(c.diag.size());
  sub.reserve(c.sub.size());
  for (const auto& m : c.diag) diag.push_back(m.real());
  for (const auto& m : c.sub) sub.push_back(m.real());
  Eigen::MatrixXd corner = c.corner01.real();
  return block_chain_negatives_t<SymTraits>(diag, sub, corner, c.has_corner,
                                            sigma);
}

}  // namespace

namespace {

struct PreparedChain {
  bool scalar = false;
  bool cplx = false;
  double eps = 0.0;
  ScalarChain sc;
  BlockChain bc;
};

PreparedChain prepare_chain(const StiffnessMatrix& A) {
  PreparedChain p;
  p.scalar = A.npts[1] == 1;
  p.cplx = A.is_complex();
  p.eps = kCountEpsRel * std::max(A.norm_bound(), 1.0);
  if (p.scalar)
    p.sc = build_scalar_chain(A);
  else
    p.bc = build_block_chain(A);
  return p;
}

CountDetail count_prepared(const PreparedChain& p, double E) {
  double sigma0 = E + p.eps;
  double extra = 0.0;
  for (int attempt = 0; attempt < 44; ++attempt) {
    std::optional<long> n =
        p.scalar ? scalar_chain_negatives(p.sc, sigma0 + extra)
                 : block_chain_negatives(p.bc, sigma0 + extra, p.cplx);
    if (n) return {*n, extra};
    extra = (extra == 0.0) ? p.eps : 2.0 * extra;
  }
  throw ComputeError("inertia count failed: persistent singular pivot");
}

}  // namespace

CountDetail eigen_count_detail(const StiffnessMatrix& A, double E) {
  return count_prepared(prepare_chain(A), E);
}

long eigen_count(const StiffnessMatrix& A, double E) {
  return eigen_count_detail(A, E).count;
}

std::vector<CountDetail> eigen_count_many(const StiffnessMatrix& A,
                                          std::span<const double> energies) {
  PreparedChain p = prepare_chain(A);
  std::vector<CountDetail> out;
  out.reserve(energies.size());
  for (double E : energies) out.push_back(count_prepared(p, E));
  return out;
}

namespace {

template <class Traits, class MatIn>
long dense_count(const MatIn& A0, double E) {
  using Mat = typename Traits::Mat;
  long n = A0.rows();
  if (n != A0.cols()) throw ComputeError("eigen_count needs a square matrix");
  if (n == 0) return 0;
  double scale = std::max(1.0, A0.cwiseAbs().rowwise().sum().maxCoeff());
  double eps = kCountEpsRel * scale;
  double extra = 0.0;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < 44; ++attempt) {
    Mat F = A0 - (E + eps + extra) * Mat::Identity(n, n);
    if (Traits::trf(F, ipiv) == 0) return bk_negatives(F, ipiv);
    extra = (extra == 0.0) ? eps : 2.0 * extra;
  }
  throw ComputeError("inertia count failed: persistent singular pivot");
}

}  // namespace

long eigen_count(const Eigen::MatrixXd& A, double E) {
  return dense_count<SymTraits>(A, E);
}

long eigen_count(const Eigen::MatrixXcd& A, double E) {
  return dense_count<HermTraits>(A, E);
}

SpectrumSlice lowest_eigenpairs(const StiffnessMatrix& A, int k,
                                bool want_vectors, long dense_cap) {
  long n = A.n_dof();
  if (k < 1) throw ConfigError("lowest_eigenpairs needs k >= 1");
  k = static_cast<int>(std::min<long>(k, n));
  SpectrumSlice out;

  if (n <= dense_cap) {
    out.method = "dense";
    if (A.is_complex()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
          A.dense(dense_cap),
          want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success)
        throw ComputeError("dense eigensolver failed");
      out.eigenvalues.assign(es.eigenvalues().data(),
                             es.eigenvalues().data() + k);
      if (want_vectors) out.vectors = es.eigenvectors().leftCols(k);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          A.dense_real(dense_cap),
          want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success)
        throw ComputeError("dense eigensolver failed");
      out.eigenvalues.assign(es.eigenvalues().data(),
                             es.eigenvalues().data() + k);
      if (want_vectors)
        out.vectors = es.eigenvectors().leftCols(k).cast<cd>();
    }
    return out;
  }

  // Lanczos with full reorthogonalization; deterministic start vector.
  out.method = "lanczos";
  double scale = std::max(A.norm_bound(), 1.0);
  double tol = 1e-9 * scale;
  long steps = std::min<long>(n, std::max<long>(8L * k, 200));

  Eigen::VectorXcd v(n);
  for (long i = 0; i < n; ++i)
    v(i) = cd(rng::uniform(0x1d51abULL, 7, static_cast<std::uint64_t>(i)) - 0.5,
              0.0);
  v.normalize();

  while (true) {
    Eigen::MatrixXcd V(n, steps);
    std::vector<double> alpha, beta;
    V.col(0) = v;
    Eigen::VectorXcd w(n);
    long built = 0;
    for (long j = 0; j < steps; ++j) {
      A.multiply(std::span<const cd>(V.col(j).data(), static_cast<std::size_t>(n)),
                 std::span<cd>(w.data(), static_cast<std::size_t>(n)));
      if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * V.col(j - 1);
      double a = std::real(V.col(j).dot(w));
      alpha.push_back(a);
      w -= a * V.col(j);
      // Full reorthogonalization, applied twice for safety.
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXcd proj = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * proj;
      }
      double b = w.norm();
      built = j + 1;
      if (b < 1e-13 * scale || j == steps - 1) break;
      beta.push_back(b);
      V.col(j + 1) = w / b;
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (long j = 0; j < built; ++j) {
      T(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < built)
        T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    long kk = std::min<long>(k, built);
    double blast =
        built <= static_cast<long>(beta.size()) && built > 0
            ? beta[static_cast<std::size_t>(built - 1)]
            : 0.0;
    double worst = 0.0;
    for (long i = 0; i < kk; ++i)
      worst = std::max(worst,
                       std::abs(blast * es.eigenvectors()(built - 1, i)));
    bool exhausted = built >= n || steps >= n;
    if (worst <= tol || exhausted) {
      out.eigenvalues.assign(es.eigenvalues().data(),
                             es.eigenvalues().data() + kk);
      if (want_vectors)
        out.vectors =
            V.leftCols(built) * es.eigenvectors().leftCols(kk).cast<cd>();
      if (worst > tol)
        throw ComputeError("lanczos did not converge to the requested accuracy");
      return out;
    }
    steps = std::min<long>(n, steps * 2);
    // restart from the best current Ritz vector estimate of the ground state
    v = (V.leftCols(built) * es.eigenvectors().col(0).cast<cd>()).normalized();
  }
}

std::vector<double> all_eigenvalues(const StiffnessMatrix& A, long cap) {
  if (A.n_dof() > cap)
    throw ComputeError("full spectrum needs n_dof <= " + std::to_string(cap) +
                       ", got " + std::to_string(A.n_dof()) +
                       "; use a smaller box");
  if (A.is_complex()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.dense(cap),
                                                       Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw ComputeError("dense eigensolver failed");
    return {es.eigenvalues().data(),
            es.eigenvalues().data() + es.eigenvalues().size()};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.dense_real(cap),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ComputeError("dense eigensolver failed");
  return {es.eigenvalues().data(),
          es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace idslab
