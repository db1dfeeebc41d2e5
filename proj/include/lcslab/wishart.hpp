#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cstdint>
#include <vector>

#include "lcslab/common.hpp"
#include "lcslab/oracle.hpp"
#include "lcslab/rng.hpp"
#include "lcslab/stats.hpp"

// Random-matrix experiments around the inverse-trace hardness argument:
// smallest-eigenvalue tails of square Wishart matrices, the posterior block
// structure revealed by mat-vec queries, and query strategies that try to
// estimate tr(W^{-1}) from few queries.
namespace lcslab::wishart {

// Entry scale of the square ensemble. Under kUnitOverD the factor X has
// iid N(0, 1/d) entries, so E[tr W] = d and eigenvalues concentrate on [0, 4].
// kStandard uses N(0, 1) entries.
enum class Normalization { kUnitOverD, kStandard };

// W = X X^T with X a d x d Gaussian factor. Almost surely positive definite.
inline Eigen::MatrixXd sample_wishart(Eigen::Index d, Normalization norm, rng::Stream& stream) {
  LCSLAB_REQUIRE(d >= 1, "sample_wishart: d >= 1");
  Eigen::MatrixXd x = stream.gaussian_matrix(d, d);
  if (norm == Normalization::kUnitOverD) x /= std::sqrt(static_cast<double>(d));
  return x * x.transpose();
}

// Rectangular variant: W = X X^T with X k x n, entries iid N(0, 1), so
// E[W] = n I_k. This is the ensemble the projection Gram blocks follow.
inline Eigen::MatrixXd sample_wishart_rect(Eigen::Index k, Eigen::Index n, rng::Stream& stream) {
  LCSLAB_REQUIRE(k >= 1 && n >= 1, "sample_wishart_rect: k, n >= 1");
  Eigen::MatrixXd x = stream.gaussian_matrix(k, n);
  return x * x.transpose();
}

// Symmetric k x k with diagonal N(0, 1) and off-diagonal N(0, 1/2) entries,
// all independent up to symmetry.
inline Eigen::MatrixXd sample_goe(Eigen::Index k, rng::Stream& stream) {
  LCSLAB_REQUIRE(k >= 1, "sample_goe: k >= 1");
  Eigen::MatrixXd g(k, k);
  const double off = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < k; ++i) {
    g(i, i) = stream.normal();
    for (Eigen::Index j = i + 1; j < k; ++j) {
      g(i, j) = off * stream.normal();
      g(j, i) = g(i, j);
    }
  }
  return g;
}

struct TailRow {
  double x = 0.0;            // threshold parameter; the event is lambda_min <= x / d^2
  std::int64_t hits = 0;
  double prob = 0.0;
  stats::Interval ci;        // Wilson interval for prob
  double ratio = 0.0;        // prob / sqrt(x)
};

// Monte Carlo table of Pr{lambda_min(W) <= x / d^2} over an x grid, one
// unit-over-d draw per trial shared across thresholds. Sharing makes the hit
// counts monotone in x by construction, so the scaling diagnostic
// prob / sqrt(x) is the only noisy column.
inline std::vector<TailRow> smallest_eig_tail(Eigen::Index d, const std::vector<double>& x_grid,
                                              std::int64_t trials, rng::Stream& stream) {
  LCSLAB_REQUIRE(d >= 1, "smallest_eig_tail: d >= 1");
  LCSLAB_REQUIRE(trials >= 0, "smallest_eig_tail: trials >= 0");
  for (double x : x_grid) LCSLAB_REQUIRE(x > 0.0, "smallest_eig_tail: thresholds must be > 0");
  if (trials == 0) return {};

  std::vector<double> lambda_min(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd w = sample_wishart(d, Normalization::kUnitOverD, ts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    lambda_min[static_cast<std::size_t>(t)] = es.eigenvalues().minCoeff();
  });

  const double d2 = static_cast<double>(d) * static_cast<double>(d);
  std::vector<TailRow> table;
  table.reserve(x_grid.size());
  for (double x : x_grid) {
    TailRow row;
    row.x = x;
    const double cut = x / d2;
    for (double lm : lambda_min) row.hits += (lm <= cut) ? 1 : 0;
    row.prob = static_cast<double>(row.hits) / static_cast<double>(trials);
    row.ci = stats::wilson(row.hits, trials);
    row.ratio = row.prob / std::sqrt(x);
    table.push_back(row);
  }
  return table;
}

// Mean of m squared norms of draws from `source`. When source yields
// Z ~ N(0, Sigma) the expectation is tr(Sigma) and a second-moment bound puts
// the estimate within a factor 2 of tr(Sigma) except with probability 8/m.
template <class Source>
double inverse_trace_estimator(Source&& source, std::int64_t m) {
  LCSLAB_REQUIRE(m >= 1, "inverse_trace_estimator: m >= 1");
  double acc = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const Eigen::VectorXd z = source();
    acc += z.squaredNorm();
  }
  return acc / static_cast<double>(m);
}

// The query-response view of W after n mat-vec probes: an n x n corner fixed
// by the responses, coupled to an unexplored (d-n) x (d-n) block wt that is
// conditionally Wishart. Y1 is n x n, Y2 is (d-n) x n.
inline Eigen::MatrixXd posterior_block(const Eigen::MatrixXd& y1, const Eigen::MatrixXd& y2,
                                       const Eigen::MatrixXd& wt) {
  const Eigen::Index n = y1.rows();
  const Eigen::Index rest = y2.rows();
  LCSLAB_REQUIRE(y1.cols() == n, "posterior_block: y1 must be square");
  LCSLAB_REQUIRE(y2.cols() == n, "posterior_block: y2 must have n columns");
  LCSLAB_REQUIRE(wt.rows() == rest && wt.cols() == rest,
                 "posterior_block: wt must match the unexplored dimension");
  LCSLAB_REQUIRE(wt.isApprox(wt.transpose(), 1e-12), "posterior_block: wt must be symmetric");
  Eigen::MatrixXd m(n + rest, n + rest);
  m.topLeftCorner(n, n) = y1 * y1.transpose();
  m.topRightCorner(n, rest) = y1 * y2.transpose();
  m.bottomLeftCorner(rest, n) = y2 * y1.transpose();
  m.bottomRightCorner(rest, rest) = y2 * y2.transpose() + wt;
  return m;
}

struct PosteriorCheck {
  std::int64_t trials = 0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max lambda_min(block) - lambda_min(wt)
  double mean_gap = 0.0;                                         // mean of the (nonnegative) slack
};

// Verifies, on random instances, that the assembled block matrix cannot have
// a smaller spectrum floor than its unexplored corner: lambda_min(block) <=
// lambda_min(wt). The inequality needs wt positive semidefinite; for
// indefinite wt it can fail (take n = 1, d = 2, Y1 = Y2 = 1, wt = -1: the
// block [[1,1],[1,0]] has lambda_min (1-sqrt(5))/2 > -1), so wt is sampled
// as a Wishart matrix here. Any violation beyond slack is a hard failure.
inline PosteriorCheck posterior_minorization_check(Eigen::Index n, Eigen::Index d,
                                                   std::int64_t trials, rng::Stream& stream) {
  LCSLAB_REQUIRE(n >= 1 && n < d && d <= 12, "posterior_minorization_check: need 1 <= n < d <= 12");
  LCSLAB_REQUIRE(trials >= 1, "posterior_minorization_check: trials >= 1");

  std::vector<double> excess(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd y1 = ts.gaussian_matrix(n, n);
    const Eigen::MatrixXd y2 = ts.gaussian_matrix(d - n, n);
    const Eigen::MatrixXd wt = sample_wishart(d - n, Normalization::kStandard, ts);
    const Eigen::MatrixXd block = posterior_block(y1, y2, wt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(block, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(wt, Eigen::EigenvaluesOnly);
    excess[static_cast<std::size_t>(t)] =
        eb.eigenvalues().minCoeff() - ew.eigenvalues().minCoeff();
  });

  PosteriorCheck out;
  out.trials = trials;
  double acc = 0.0;
  for (double e : excess) {
    out.max_excess = std::max(out.max_excess, e);
    acc += -e;
    LCSLAB_CHECK_NUMERIC(e <= 1e-10, "posterior block beat the unexplored corner's floor");
  }
  out.mean_gap = acc / static_cast<double>(trials);
  return out;
}

// How a strategy spends its mat-vec budget when asked for tr(W^{-1}).
enum class QueryStrategy {
  kExactRecovery,  // query every basis vector, invert the recovered matrix
  kHutchinson,     // one Gaussian probe z, conjugate gradient on W u = z, z'u
  kBlockPower,     // two powers of a random block, Ritz values, unit fill-in
};

inline const char* to_string(QueryStrategy s) {
  switch (s) {
    case QueryStrategy::kExactRecovery: return "exact-recovery";
    case QueryStrategy::kHutchinson: return "hutchinson-cg";
    case QueryStrategy::kBlockPower: return "block-power";
  }
  return "unknown";
}

namespace detail {

inline double exact_recovery_estimate(MatVecOracle& oracle) {
  const Eigen::Index d = oracle.dim();
  Eigen::MatrixXd w(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    w.col(i) = oracle.apply(e);
  }
  return w.inverse().trace();
}

// Hutchinson with a single probe: E[z' W^{-1} z] = tr(W^{-1}). The inner
// solve is plain conjugate gradient started at zero, so the residual is the
// probe itself and every iteration costs exactly one query.
inline double hutchinson_estimate(MatVecOracle& oracle, Eigen::Index budget, rng::Stream& stream) {
  const Eigen::Index d = oracle.dim();
  const Eigen::VectorXd z = stream.gaussian_vector(d);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd r = z;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (Eigen::Index it = 0; it < budget && rr > 0.0; ++it) {
    const Eigen::VectorXd wp = oracle.apply(p);
    const double alpha = rr / p.dot(wp);
    if (!std::isfinite(alpha)) break;
    u += alpha * p;
    r -= alpha * wp;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return z.dot(u);
}

// Block power sketch: with b = min(floor(budget / 2), d / 2) probes Z, the
// responses S = W Z and T = W S span a Krylov block B = [Z S] whose Ritz
// values theta solve (B' W B) v = theta (B' B) v, all assembled from queried
// data. The unexplored d - 2b directions are billed at eigenvalue 1, the
// ensemble mean under the unit-over-d scale.
inline double block_power_estimate(MatVecOracle& oracle, Eigen::Index budget,
                                   rng::Stream& stream) {
  const Eigen::Index d = oracle.dim();
  const Eigen::Index b = std::max<Eigen::Index>(1, std::min(budget / 2, d / 2));
  const Eigen::MatrixXd z = stream.gaussian_matrix(d, b);
  Eigen::MatrixXd s(d, b), t(d, b);
  for (Eigen::Index j = 0; j < b; ++j) s.col(j) = oracle.apply(z.col(j));
  for (Eigen::Index j = 0; j < b; ++j) t.col(j) = oracle.apply(s.col(j));
  Eigen::MatrixXd basis(d, 2 * b);
  basis << z, s;
  Eigen::MatrixXd image(d, 2 * b);
  image << s, t;
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  const Eigen::MatrixXd form = basis.transpose() * image;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      0.5 * (form + form.transpose()), gram, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  double acc = static_cast<double>(d - 2 * b);
  for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i) {
    const double theta = ges.eigenvalues()[i];
    LCSLAB_CHECK_NUMERIC(theta > 0.0, "block power: nonpositive Ritz value");
    acc += 1.0 / theta;
  }
  return acc;
}

}  // namespace detail

struct QueryRow {
  Eigen::Index budget = 0;   // mat-vec queries allowed per trial
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double rate = 0.0;         // fraction of trials with estimate in [truth/2, 2 truth]
  stats::Interval ci;
  double mean_rel_error = 0.0;
};

// Success-rate table for one strategy across query budgets. Every trial draws
// a fresh unit-over-d matrix, computes the exact tr(W^{-1}) by a full
// eigendecomposition, then lets the strategy interact with the matrix only
// through a counting mat-vec oracle. Success means landing within a factor of
// two of the truth. The counter is checked against the budget after the run.
inline std::vector<QueryRow> inverse_trace_query_experiment(Eigen::Index d, QueryStrategy strategy,
                                                            const std::vector<Eigen::Index>& budgets,
                                                            std::int64_t trials,
                                                            rng::Stream& stream) {
  LCSLAB_REQUIRE(d >= 2 && d <= 512, "inverse_trace_query_experiment: 2 <= d <= 512");
  LCSLAB_REQUIRE(trials >= 1, "inverse_trace_query_experiment: trials >= 1");
  LCSLAB_REQUIRE(!budgets.empty(), "inverse_trace_query_experiment: empty budget grid");
  for (Eigen::Index n : budgets) {
    LCSLAB_REQUIRE(n >= 1, "inverse_trace_query_experiment: budgets must be >= 1");
    if (strategy == QueryStrategy::kExactRecovery)
      LCSLAB_REQUIRE(n >= d, "exact recovery needs at least d queries");
  }

  const std::size_t cols = budgets.size();
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials) * cols, 0);
  std::vector<double> rel(static_cast<std::size_t>(trials) * cols, 0.0);

  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd w = sample_wishart(d, Normalization::kUnitOverD, ts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    LCSLAB_CHECK_NUMERIC(es.eigenvalues().minCoeff() > 0.0, "drew a singular Wishart matrix");
    const double truth = es.eigenvalues().cwiseInverse().sum();

    for (std::size_t j = 0; j < cols; ++j) {
      const Eigen::Index budget = budgets[j];
      rng::Stream qs = ts.child("strategy").child(static_cast<std::uint64_t>(j));
      MatVecOracle oracle = make_matvec_oracle(w);
      double estimate = 0.0;
      switch (strategy) {
        case QueryStrategy::kExactRecovery:
          estimate = detail::exact_recovery_estimate(oracle);
          break;
        case QueryStrategy::kHutchinson:
          estimate = detail::hutchinson_estimate(oracle, budget, qs);
          break;
        case QueryStrategy::kBlockPower:
          estimate = detail::block_power_estimate(oracle, budget, qs);
          break;
      }
      LCSLAB_CHECK_NUMERIC(oracle.query_count() <= budget, "strategy exceeded its query budget");
      const std::size_t slot = static_cast<std::size_t>(t) * cols + j;
      hit[slot] = (estimate >= 0.5 * truth && estimate <= 2.0 * truth) ? 1 : 0;
      rel[slot] = std::abs(estimate - truth) / truth;
    }
  });

  std::vector<QueryRow> table;
  table.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    QueryRow row;
    row.budget = budgets[j];
    row.trials = trials;
    double acc = 0.0;
    for (std::int64_t t = 0; t < trials; ++t) {
      const std::size_t slot = static_cast<std::size_t>(t) * cols + j;
      row.successes += hit[slot];
      acc += rel[slot];
    }
    row.rate = static_cast<double>(row.successes) / static_cast<double>(trials);
    row.ci = stats::wilson(row.successes, trials);
    row.mean_rel_error = acc / static_cast<double>(trials);
    table.push_back(row);
  }
  return table;
}

// Frozen multiplier for the inverse-trace tail: the event tr(W^{-1}) <= C' d^2
// under the unit-over-d scale. Calibrated once against d in {8, 32} (observed
// rates 0.61 and 0.59) and kept fixed so downstream rate thresholds stay stable.
inline constexpr double kInverseTraceConstant = 6.0;

struct InvTraceTail {
  std::int64_t trials = 0;
  std::int64_t within = 0;
  double rate = 0.0;
  stats::Interval ci;
};

// Fraction of draws with tr(W^{-1}) <= kInverseTraceConstant * d^2.
inline InvTraceTail inverse_trace_bound_rate(Eigen::Index d, std::int64_t trials,
                                             rng::Stream& stream) {
  LCSLAB_REQUIRE(d >= 2 && d <= 512, "inverse_trace_bound_rate: 2 <= d <= 512");
  LCSLAB_REQUIRE(trials >= 1, "inverse_trace_bound_rate: trials >= 1");
  std::vector<std::uint8_t> ok(static_cast<std::size_t>(trials), 0);
  const double cap = kInverseTraceConstant * static_cast<double>(d) * static_cast<double>(d);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd w = sample_wishart(d, Normalization::kUnitOverD, ts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
    const double inv_trace = es.eigenvalues().cwiseInverse().sum();
    ok[static_cast<std::size_t>(t)] = (inv_trace <= cap) ? 1 : 0;
  });
  InvTraceTail out;
  out.trials = trials;
  for (auto v : ok) out.within += v;
  out.rate = static_cast<double>(out.within) / static_cast<double>(trials);
  out.ci = stats::wilson(out.within, trials);
  return out;
}

}  // namespace lcslab::wishart
