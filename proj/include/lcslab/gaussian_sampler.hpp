#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "lcslab/chebyshev.hpp"
#include "lcslab/common.hpp"
#include "lcslab/oracle.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::gauss {

// Everything fixed before the first oracle query: the matrix is only known
// through mat-vecs, so the plan depends on (kappa, dim, eps) alone.
struct SamplerPlan {
  double kappa = 1.0;
  double eps = 0.0;
  double delta = 0.0;  // per-eigenvalue relative budget, eps / (4 sqrt(dim))
  Eigen::Index dim = 0;
  cheb::CertifiedApprox q;  // certified surrogate of x^{-1/2}
  bool use_krylov = false;  // polynomial path iff its degree beats dim
  Eigen::Index matvecs_per_sample = 0;
};

inline SamplerPlan plan_gaussian_sampler(double kappa, Eigen::Index dim, double eps) {
  LCSLAB_REQUIRE(kappa >= 1.0, "sampler plan: kappa >= 1");
  LCSLAB_REQUIRE(dim >= 1, "sampler plan: dim >= 1");
  LCSLAB_REQUIRE(eps > 0.0 && eps < 1.0, "sampler plan: eps in (0, 1)");
  SamplerPlan plan;
  plan.kappa = kappa;
  plan.eps = eps;
  plan.dim = dim;
  plan.delta = eps / (4.0 * std::sqrt(static_cast<double>(dim)));
  if (kappa == 1.0) {
    // Spectrum is {1}: the identity is its own inverse square root.
    plan.q.poly = cheb::ChebyshevPolynomial(0.5, 1.5, {1.0});
    plan.q.degree = 0;
  } else {
    // Certification needs an interval; widen sub-2 condition numbers to [1, 2]
    // (the certified uniform error only improves on the smaller true range).
    plan.q = cheb::inv_sqrt_approx(std::max(kappa, 2.0), plan.delta);
  }
  plan.use_krylov = plan.q.degree < dim;
  plan.matvecs_per_sample = plan.use_krylov ? plan.q.degree : dim;
  return plan;
}

// p(A) z by the Clenshaw recurrence in operator form. Costs exactly
// p.degree() oracle applications: the leading iteration multiplies a zero
// vector and is skipped.
inline Eigen::VectorXd clenshaw_apply(const cheb::ChebyshevPolynomial& p, MatVecOracle& oracle,
                                      const Eigen::VectorXd& z) {
  LCSLAB_REQUIRE(z.size() == oracle.dim(), "clenshaw_apply: dimension mismatch");
  const double lo = p.lo(), hi = p.hi();
  const double alpha = 2.0 / (hi - lo), beta = -(lo + hi) / (hi - lo);
  const auto& c = p.coefficients();
  const int r = p.degree();
  if (r == 0) return c[0] * z;
  auto t_apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return alpha * oracle.apply(v) + beta * v;
  };
  Eigen::VectorXd b1 = c[static_cast<std::size_t>(r)] * z;  // j = r iteration, b was zero
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(z.size());
  for (int j = r - 1; j >= 1; --j) {
    Eigen::VectorXd b = 2.0 * t_apply(b1) - b2 + c[static_cast<std::size_t>(j)] * z;
    b2.swap(b1);
    b1.swap(b);
  }
  return t_apply(b1) - b2 + c[0] * z;
}

struct SampleBatch {
  Eigen::MatrixXd samples;            // one row per sample
  std::vector<std::int64_t> queries;  // marginal oracle cost per sample
  std::string method;                 // "krylov" or "exact"
};

// Draws n approximate N(0, A^{-1}) samples from a mat-vec oracle for A.
// Krylov path: y = q(A) z. Exact path: reconstruct A column by column (dim
// queries, charged to the first sample), factor once, then samples are free.
inline SampleBatch draw_samples(const SamplerPlan& plan, MatVecOracle& oracle, int n,
                                rng::Stream& rng) {
  LCSLAB_REQUIRE(n >= 1, "draw_samples: n >= 1");
  LCSLAB_REQUIRE(oracle.dim() == plan.dim, "draw_samples: plan/oracle dimension mismatch");
  const Eigen::Index d = plan.dim;
  SampleBatch batch;
  batch.samples.resize(n, d);
  batch.queries.assign(static_cast<std::size_t>(n), 0);

  if (plan.use_krylov) {
    batch.method = "krylov";
    for (int s = 0; s < n; ++s) {
      const std::int64_t before = oracle.query_count();
      batch.samples.row(s) = clenshaw_apply(plan.q.poly, oracle, rng.gaussian_vector(d));
      batch.queries[static_cast<std::size_t>(s)] = oracle.query_count() - before;
    }
    return batch;
  }

  batch.method = "exact";
  const std::int64_t before = oracle.query_count();
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index j = 0; j < d; ++j) a.col(j) = oracle.apply(Eigen::VectorXd::Unit(d, j));
  batch.queries[0] = oracle.query_count() - before;
  a = 0.5 * (a + a.transpose());  // symmetrize oracle rounding
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  LCSLAB_CHECK_NUMERIC(ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 1e-12,
                       "draw_samples: reconstructed matrix is not positive definite");
  // A = P' L D L' P, so y = P' L^{-T} D^{-1/2} z has covariance A^{-1}.
  const Eigen::VectorXd inv_sqrt_d = ldlt.vectorD().cwiseSqrt().cwiseInverse();
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXd w = inv_sqrt_d.cwiseProduct(rng.gaussian_vector(d));
    Eigen::VectorXd u = ldlt.matrixU().solve(w);
    batch.samples.row(s) = ldlt.transpositionsP().transpose() * u;
  }
  return batch;
}

// KL(N(0, q(A)^2 A) || N(0, A^{-1})) for commuting covariances reduces to the
// eigenvalues: with e_k = q(l_k)^2 l_k - 1 the divergence is
// sum (e_k - log(1 + e_k)) / 2.
inline double exact_kl_centered(const cheb::ChebyshevPolynomial& q, const Eigen::VectorXd& lambdas) {
  double kl = 0.0;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const double ql = q(lambdas[k]);
    const double e = ql * ql * lambdas[k] - 1.0;
    LCSLAB_CHECK_NUMERIC(e > -1.0, "exact_kl_centered: degenerate covariance ratio");
    kl += 0.5 * (e - std::log1p(e));
  }
  return kl;
}

// Quadratic envelope sum e_k^2; dominates the exact KL when every |e_k| is at
// most 1/2 (x - log(1+x) <= 2 x^2 there).
inline double kl_quadratic_bound(const cheb::ChebyshevPolynomial& q, const Eigen::VectorXd& lambdas) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const double ql = q(lambdas[k]);
    const double e = ql * ql * lambdas[k] - 1.0;
    LCSLAB_REQUIRE(std::abs(e) <= 0.5, "kl_quadratic_bound: only valid for |e| <= 1/2");
    s += e * e;
  }
  return s;
}

}  // namespace lcslab::gauss
