#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "lcslab/chebyshev.hpp"
#include "lcslab/common.hpp"
#include "lcslab/rng.hpp"
#include "lcslab/simplex.hpp"
#include "lcslab/stats.hpp"
#include "lcslab/wishart.hpp"

// Matched diagonal pairs that agree on low moments yet differ in inverse
// trace. The weights come from a small LP over scaled Chebyshev extrema,
// are strengthened into a nearby pair with a uniform floor, and are rounded
// to integer multiplicities. The experiments at the bottom probe how visible
// the difference is through quadratic-form data: entrywise maximal coupling
// of the surrogate Gram blocks, Krylov-style transcripts, and a one-sample
// norm threshold.
namespace lcslab::hard_pair {

inline constexpr double kDefaultC0 = 0.05;

// Shipped contraction weight for the recombination step; shrinks fast in the
// condition number so the paired weights stay entrywise close.
inline double default_c1(double kappa, double d) {
  LCSLAB_REQUIRE(kappa > 1.0 && d > 1.0, "default_c1: kappa > 1 and d > 1");
  const double l = std::log(d);
  return 1.0 / (kappa * std::sqrt(kappa) * l * l * l * l);
}

// Operating-point degree for a given condition number and dimension.
inline int default_degree(double kappa, double d, double c0 = kDefaultC0) {
  LCSLAB_REQUIRE(kappa > 1.0 && d > 1.0 && c0 > 0.0, "default_degree: bad parameters");
  return std::max(1, static_cast<int>(std::floor(0.5 * c0 * std::sqrt(kappa) * std::log(d))));
}

struct HardPair {
  int degree = 0;                  // K
  double kappa = 1.0;
  Eigen::Index dim = 0;            // d
  double c0 = kDefaultC0;
  double c1 = 0.0;
  Eigen::VectorXd lambda;          // K+2 nodes, descending kappa .. 1
  Eigen::VectorXd x, x_prime;      // strengthened weights, each summing to d
  Eigen::VectorXd x_vertex, x_vertex_prime;  // raw LP vertex before strengthening
  double lp_value = 0.0;           // LP optimum = 2d E over the nodes
  double dual_value = 0.0;         // b'y from the simplex multipliers
  double strengthened_gap = 0.0;   // sum_i (x_i - x'_i)/lambda_i = c1 lp_value / 2
  Eigen::VectorXi n, n_prime;      // rounded multiplicities (empty before rounding)
  double trace_gap = 0.0;          // tr D^{-1} - tr D'^{-1} of the rounded pair
  Eigen::VectorXd diag, diag_prime;  // length-d spectra (descending)
  bool has_rotation = false;
  Eigen::MatrixXd rotation;        // orthogonal q; the operators are q' D q
};

// Largest-fractional-part rounding to integers with an exact total. Ties are
// broken toward the lower index so the result is input-deterministic.
inline Eigen::VectorXi round_multiplicities(const Eigen::VectorXd& x, Eigen::Index total) {
  const Eigen::Index count = x.size();
  LCSLAB_REQUIRE(count >= 1, "round_multiplicities: empty input");
  for (Eigen::Index i = 0; i < count; ++i)
    LCSLAB_REQUIRE(x[i] >= 0.0, "round_multiplicities: weights must be nonnegative");
  LCSLAB_REQUIRE(std::abs(x.sum() - static_cast<double>(total)) <=
                     1e-6 * std::max(1.0, static_cast<double>(total)),
                 "round_multiplicities: weights must sum to the requested total");

  Eigen::VectorXi out(count);
  std::int64_t floor_sum = 0;
  std::vector<std::pair<double, Eigen::Index>> frac(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) {
    const double f = std::floor(x[i]);
    out[i] = static_cast<int>(f);
    floor_sum += static_cast<std::int64_t>(f);
    frac[static_cast<std::size_t>(i)] = {x[i] - f, i};
  }
  const std::int64_t deficit = static_cast<std::int64_t>(total) - floor_sum;
  LCSLAB_CHECK_NUMERIC(deficit >= 0 && deficit <= count,
                       "round_multiplicities: inconsistent floor total");
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < deficit; ++r) out[frac[static_cast<std::size_t>(r)].second] += 1;
  return out;
}

namespace detail {

// Moment-matching LP over the K+2 node weights of both diagonals:
// maximize sum_i (x_i - x'_i)/lambda_i subject to total mass 2d and equality
// of moments 0..K between the two sides. The power-basis rows lambda^j blow
// up like kappa^K, so the tableau carries the row-space-equivalent Chebyshev
// rows T_j(beta_i) instead, whose entries stay in [-1, 1].
inline lp::LinearProgram moment_lp(const cheb::NodeSet& nodes, Eigen::Index dim) {
  const Eigen::Index count = nodes.lambda.size();
  lp::LinearProgram prog;
  prog.a = Eigen::MatrixXd::Zero(count, 2 * count);
  prog.b = Eigen::VectorXd::Zero(count);
  prog.b[0] = 2.0 * static_cast<double>(dim);
  prog.c.resize(2 * count);
  for (Eigen::Index i = 0; i < count; ++i) {
    prog.a(0, i) = 1.0;
    prog.a(0, count + i) = 1.0;
    for (int j = 0; j <= nodes.degree; ++j) {
      const double t = cheb::cheb_value(j, nodes.beta[i]);
      prog.a(1 + j, i) = t;
      prog.a(1 + j, count + i) = -t;
    }
    prog.c[i] = 1.0 / nodes.lambda[i];
    prog.c[count + i] = -1.0 / nodes.lambda[i];
  }
  return prog;
}

}  // namespace detail

// Consistency checks shared by the solver and the builder. Everything here
// is a hard failure: a pair that violates its own contract must not be used.
inline void validate_hard_pair(const HardPair& hp) {
  const Eigen::Index count = hp.lambda.size();
  const double d = static_cast<double>(hp.dim);
  LCSLAB_CHECK_NUMERIC(count == hp.degree + 2, "hard pair: node count mismatch");
  for (Eigen::Index i = 0; i + 1 < count; ++i)
    LCSLAB_CHECK_NUMERIC(hp.lambda[i] > hp.lambda[i + 1], "hard pair: nodes must descend");

  LCSLAB_CHECK_NUMERIC(std::abs(hp.x.sum() - d) <= 1e-9 * d, "hard pair: x mass drifted");
  LCSLAB_CHECK_NUMERIC(std::abs(hp.x_prime.sum() - d) <= 1e-9 * d, "hard pair: x' mass drifted");

  // The uniform floor survives strengthening exactly; see solve_moment_lp.
  const double floor_weight = 0.5 * (d / static_cast<double>(count));
  const double ratio_cap = 2.0 * hp.c1 / (1.0 - hp.c1);
  for (Eigen::Index i = 0; i < count; ++i) {
    LCSLAB_CHECK_NUMERIC(hp.x[i] >= floor_weight, "hard pair: weight fell below the floor");
    LCSLAB_CHECK_NUMERIC(hp.x_prime[i] >= floor_weight, "hard pair: weight fell below the floor");
    const double diff = std::abs(hp.x[i] - hp.x_prime[i]);
    LCSLAB_CHECK_NUMERIC(diff <= ratio_cap * hp.x[i], "hard pair: relative gap exceeds cap");
    LCSLAB_CHECK_NUMERIC(diff <= ratio_cap * hp.x_prime[i], "hard pair: relative gap exceeds cap");
  }

  for (int j = 0; j <= hp.degree; ++j) {
    double drift = 0.0;
    for (Eigen::Index i = 0; i < count; ++i)
      drift += (hp.x[i] - hp.x_prime[i]) * std::pow(hp.lambda[i], j);
    LCSLAB_CHECK_NUMERIC(std::abs(drift) <= 1e-6 * d * std::pow(hp.kappa, j),
                         "hard pair: strengthened moments do not match");
  }

  if (hp.n.size() > 0) {
    LCSLAB_CHECK_NUMERIC(hp.n.size() == count && hp.n_prime.size() == count,
                         "hard pair: multiplicity length mismatch");
    std::int64_t sum_n = 0, sum_np = 0;
    for (Eigen::Index i = 0; i < count; ++i) {
      sum_n += hp.n[i];
      sum_np += hp.n_prime[i];
      LCSLAB_CHECK_NUMERIC(std::abs(hp.n[i] - hp.x[i]) < 1.0, "hard pair: rounding moved a weight by one or more");
      LCSLAB_CHECK_NUMERIC(std::abs(hp.n_prime[i] - hp.x_prime[i]) < 1.0,
                           "hard pair: rounding moved a weight by one or more");
    }
    LCSLAB_CHECK_NUMERIC(sum_n == hp.dim && sum_np == hp.dim,
                         "hard pair: multiplicities must sum to the dimension");
    for (int j = 0; j <= hp.degree; ++j) {
      double drift = 0.0;
      for (Eigen::Index i = 0; i < count; ++i)
        drift += static_cast<double>(hp.n[i] - hp.n_prime[i]) * std::pow(hp.lambda[i], j);
      LCSLAB_CHECK_NUMERIC(std::abs(drift) <=
                               static_cast<double>(count) * std::pow(hp.kappa, j),
                           "hard pair: rounded moment drift exceeds its budget");
    }
    const double slack = 2.0 * static_cast<double>(count);
    LCSLAB_CHECK_NUMERIC(hp.trace_gap >= hp.c1 * 0.5 * hp.lp_value - slack - 1e-9 * d,
                         "hard pair: trace gap fell below the rounding allowance");
  }
}

// Solves the moment LP and applies the two strengthening steps: averaging
// with the uniform weights (installs the d/(2(K+2)) floor at half the gap)
// and convex recombination of the pair (shrinks the gap to c1 times that
// while forcing entrywise closeness). Returns the pair before rounding.
inline HardPair solve_moment_lp(int degree, double kappa, Eigen::Index dim, double c1) {
  LCSLAB_REQUIRE(degree >= 1, "solve_moment_lp: degree >= 1");
  LCSLAB_REQUIRE(kappa > 1.0, "solve_moment_lp: kappa > 1");
  LCSLAB_REQUIRE(dim >= 4 * (degree + 2), "solve_moment_lp: dim >= 4 (degree + 2)");
  LCSLAB_REQUIRE(c1 > 0.0 && c1 < 1.0, "solve_moment_lp: c1 in (0, 1)");

  HardPair hp;
  hp.degree = degree;
  hp.kappa = kappa;
  hp.dim = dim;
  hp.c1 = c1;
  const cheb::NodeSet nodes = cheb::extrema_nodes(degree, kappa);
  hp.lambda = nodes.lambda;
  const Eigen::Index count = nodes.lambda.size();

  const lp::SimplexResult sol = lp::solve_simplex(detail::moment_lp(nodes, dim));
  LCSLAB_CHECK_NUMERIC(sol.status == lp::LpStatus::kOptimal, "moment LP did not reach an optimum");
  hp.lp_value = sol.value;
  hp.dual_value = 2.0 * static_cast<double>(dim) * sol.dual[0];
  LCSLAB_CHECK_NUMERIC(std::abs(hp.lp_value - hp.dual_value) <=
                           1e-6 * std::max(1.0, std::abs(hp.lp_value)),
                       "moment LP left a duality gap");

  hp.x_vertex = sol.x.head(count).cwiseMax(0.0);
  hp.x_vertex_prime = sol.x.tail(count).cwiseMax(0.0);

  // Step one: average with the uniform weights. Halving is exact and adding
  // a nonnegative term to floor_weight cannot round below it, so the floor
  // holds as a plain comparison, not just up to slack.
  const double floor_weight = 0.5 * (static_cast<double>(dim) / static_cast<double>(count));
  Eigen::VectorXd xa(count), xb(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    xa[i] = floor_weight + 0.5 * hp.x_vertex[i];
    xb[i] = floor_weight + 0.5 * hp.x_vertex_prime[i];
  }

  // Step two: pull each coordinate pair toward its midpoint, keeping only a
  // c1 fraction of the separation. Anchoring at the pairwise minimum keeps
  // both outputs >= min(xa, xb) >= floor_weight exactly in floating point.
  hp.x.resize(count);
  hp.x_prime.resize(count);
  const double w_near = 0.5 * (1.0 + c1);
  const double w_far = 0.5 * (1.0 - c1);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double lo = std::min(xa[i], xb[i]);
    const double delta = std::abs(xa[i] - xb[i]);
    if (xa[i] <= xb[i]) {
      hp.x[i] = lo + w_far * delta;
      hp.x_prime[i] = lo + w_near * delta;
    } else {
      hp.x[i] = lo + w_near * delta;
      hp.x_prime[i] = lo + w_far * delta;
    }
  }

  hp.strengthened_gap = 0.0;
  for (Eigen::Index i = 0; i < count; ++i)
    hp.strengthened_gap += (hp.x[i] - hp.x_prime[i]) / hp.lambda[i];
  LCSLAB_CHECK_NUMERIC(std::abs(hp.strengthened_gap - c1 * 0.5 * hp.lp_value) <=
                           1e-9 * std::max(1.0, std::abs(hp.lp_value)),
                       "strengthening did not scale the gap by c1/2");

  validate_hard_pair(hp);
  return hp;
}

// Completes a pair: rounds the weights to multiplicities, expands the
// length-d spectra, and optionally draws one Haar rotation shared by both
// operators (QR of a Gaussian matrix with the R diagonal forced positive,
// which makes the factorization, and so the draw, unique).
inline HardPair build_hard_pair(int degree, double kappa, Eigen::Index dim, double c1,
                                rng::Stream& stream, bool with_rotation = true) {
  HardPair hp = solve_moment_lp(degree, kappa, dim, c1);
  hp.n = round_multiplicities(hp.x, dim);
  hp.n_prime = round_multiplicities(hp.x_prime, dim);

  const Eigen::Index count = hp.lambda.size();
  hp.trace_gap = 0.0;
  for (Eigen::Index i = 0; i < count; ++i)
    hp.trace_gap += static_cast<double>(hp.n[i] - hp.n_prime[i]) / hp.lambda[i];

  hp.diag.resize(dim);
  hp.diag_prime.resize(dim);
  Eigen::Index at = 0, at_p = 0;
  for (Eigen::Index i = 0; i < count; ++i) {
    hp.diag.segment(at, hp.n[i]).setConstant(hp.lambda[i]);
    hp.diag_prime.segment(at_p, hp.n_prime[i]).setConstant(hp.lambda[i]);
    at += hp.n[i];
    at_p += hp.n_prime[i];
  }

  if (with_rotation) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stream.gaussian_matrix(dim, dim));
    hp.rotation = qr.householderQ();
    const Eigen::VectorXd r_diag = qr.matrixQR().diagonal();
    for (Eigen::Index i = 0; i < dim; ++i)
      if (r_diag[i] < 0.0) hp.rotation.col(i) = -hp.rotation.col(i);
    hp.has_rotation = true;
  }

  validate_hard_pair(hp);
  return hp;
}

inline const Eigen::VectorXd& diagonal_spectrum(const HardPair& hp, bool prime) {
  LCSLAB_REQUIRE(hp.diag.size() == hp.dim, "diagonal_spectrum: pair has not been rounded");
  return prime ? hp.diag_prime : hp.diag;
}

// One application of the (possibly rotated) operator q' D q.
inline Eigen::VectorXd apply_operator(const HardPair& hp, const Eigen::VectorXd& v, bool prime) {
  LCSLAB_REQUIRE(v.size() == hp.dim, "apply_operator: dimension mismatch");
  const Eigen::VectorXd& spectrum = diagonal_spectrum(hp, prime);
  if (!hp.has_rotation) return spectrum.cwiseProduct(v);
  Eigen::VectorXd w = hp.rotation * v;
  w.array() *= spectrum.array();
  return hp.rotation.transpose() * w;
}

inline Eigen::MatrixXd dense_operator(const HardPair& hp, bool prime) {
  LCSLAB_REQUIRE(hp.dim <= 512, "dense_operator: dimension capped at 512");
  const Eigen::VectorXd& spectrum = diagonal_spectrum(hp, prime);
  if (!hp.has_rotation) return spectrum.asDiagonal();
  return hp.rotation.transpose() * spectrum.asDiagonal() * hp.rotation;
}

struct Transcript {
  int depth = 0;
  std::vector<Eigen::MatrixXd> gram;  // gram[j](a, b) = <z_a, M^j z_b>, j = 0..depth
};

// Gram tensor of one seed block against its operator powers, computed by
// chained mat-vec products. Each slice is symmetrized, which the exact
// tensor satisfies identically.
inline Transcript krylov_transcript(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                    const Eigen::MatrixXd& seeds, int depth) {
  LCSLAB_REQUIRE(static_cast<bool>(apply), "krylov_transcript: empty operator");
  LCSLAB_REQUIRE(seeds.cols() >= 1, "krylov_transcript: need at least one seed");
  LCSLAB_REQUIRE(depth >= 0 && depth <= 64, "krylov_transcript: depth in [0, 64]");
  Transcript out;
  out.depth = depth;
  out.gram.reserve(static_cast<std::size_t>(depth) + 1);
  Eigen::MatrixXd v = seeds;
  for (int j = 0; j <= depth; ++j) {
    if (j > 0)
      for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c) = apply(v.col(c));
    const Eigen::MatrixXd g = seeds.transpose() * v;
    out.gram.push_back(0.5 * (g + g.transpose()));
  }
  return out;
}

inline Transcript krylov_transcript(const Eigen::MatrixXd& m, const Eigen::MatrixXd& seeds,
                                    int depth) {
  LCSLAB_REQUIRE(m.rows() == m.cols() && m.rows() == seeds.rows(),
                 "krylov_transcript: operator and seeds must share the dimension");
  return krylov_transcript([&m](const Eigen::VectorXd& v) { return m * v; }, seeds, depth);
}

inline Transcript krylov_transcript(const HardPair& hp, bool prime, const Eigen::MatrixXd& seeds,
                                    int depth) {
  LCSLAB_REQUIRE(seeds.rows() == hp.dim, "krylov_transcript: seed dimension mismatch");
  return krylov_transcript(
      [&hp, prime](const Eigen::VectorXd& v) { return apply_operator(hp, v, prime); }, seeds,
      depth);
}

// Upper triangles of all slices, stacked by power; the feature vector used
// by two-sample tests over transcripts.
inline Eigen::VectorXd flatten_transcript(const Transcript& t) {
  LCSLAB_REQUIRE(!t.gram.empty(), "flatten_transcript: empty transcript");
  const Eigen::Index k = t.gram.front().rows();
  const Eigen::Index per = k * (k + 1) / 2;
  Eigen::VectorXd out(static_cast<Eigen::Index>(t.gram.size()) * per);
  Eigen::Index at = 0;
  for (const Eigen::MatrixXd& g : t.gram)
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a; b < k; ++b) out[at++] = g(a, b);
  return out;
}

namespace detail {

inline double log_normal_density(double x, double mu, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - (x - mu) * (x - mu) / (2.0 * var);
}

struct CoupledDraw {
  double from_p = 0.0;
  double from_q = 0.0;
  bool coupled = false;
};

// Maximal coupling of two normal laws: the draws agree with probability
// exactly 1 - TV. The mismatch branch samples the residual of q by
// rejection; its acceptance odds are the total variation itself, so the
// expected extra work per call stays O(1).
inline CoupledDraw couple_normals(double mu_p, double var_p, double mu_q, double var_q,
                                  rng::Stream& s) {
  LCSLAB_REQUIRE(var_p > 0.0 && var_q > 0.0, "couple_normals: variances must be positive");
  CoupledDraw out;
  const double x = mu_p + std::sqrt(var_p) * s.normal();
  out.from_p = x;
  if (std::log(s.uniform()) <= log_normal_density(x, mu_q, var_q) -
                                   log_normal_density(x, mu_p, var_p)) {
    out.from_q = x;
    out.coupled = true;
    return out;
  }
  for (std::int64_t it = 0; it < 100000000; ++it) {
    const double y = mu_q + std::sqrt(var_q) * s.normal();
    if (std::log(s.uniform()) > log_normal_density(y, mu_p, var_p) -
                                    log_normal_density(y, mu_q, var_q)) {
      out.from_q = y;
      return out;
    }
  }
  LCSLAB_CHECK_NUMERIC(false, "couple_normals: residual sampling did not terminate");
  return out;
}

}  // namespace detail

struct CouplingBlock {
  Eigen::Index n = 0;        // multiplicity behind the first block
  Eigen::Index n_prime = 0;  // multiplicity behind the second
  double shift = 0.0;        // target diagonal offset x_i - x'_i
};

inline std::vector<CouplingBlock> coupling_blocks(const HardPair& hp) {
  LCSLAB_REQUIRE(hp.n.size() == hp.lambda.size(), "coupling_blocks: pair has not been rounded");
  std::vector<CouplingBlock> out;
  out.reserve(static_cast<std::size_t>(hp.lambda.size()));
  for (Eigen::Index i = 0; i < hp.lambda.size(); ++i)
    out.push_back({hp.n[i], hp.n_prime[i], hp.x[i] - hp.x_prime[i]});
  return out;
}

struct CouplingReport {
  std::int64_t trials = 0;
  std::int64_t all_coupled = 0;
  double rate = 0.0;
  stats::Interval ci;
  std::vector<double> block_failure;  // per block fraction of trials with a mismatch
};

// Entrywise maximal coupling of the surrogate Gram blocks. Block i of the
// first side has diagonal entries N(n_i, 2 n_i) and off-diagonal N(0, n_i);
// the goal is the second side's block plus shift * I, entry by entry. A
// trial counts as coupled only when every entry of every block agrees.
inline CouplingReport goe_coupling_experiment(int degree, const std::vector<CouplingBlock>& blocks,
                                              std::int64_t trials, rng::Stream& stream) {
  LCSLAB_REQUIRE(degree >= 1, "goe_coupling_experiment: degree >= 1");
  LCSLAB_REQUIRE(!blocks.empty(), "goe_coupling_experiment: no blocks");
  LCSLAB_REQUIRE(trials >= 1, "goe_coupling_experiment: trials >= 1");
  const double k2 = static_cast<double>(degree) * static_cast<double>(degree);
  for (const CouplingBlock& b : blocks)
    LCSLAB_REQUIRE(static_cast<double>(std::min(b.n, b.n_prime)) >= k2,
                   "goe_coupling_experiment: multiplicities must be >= degree^2");

  const std::size_t nb = blocks.size();
  std::vector<std::uint8_t> fail(static_cast<std::size_t>(trials) * nb, 0);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    for (std::size_t i = 0; i < nb; ++i) {
      const CouplingBlock& blk = blocks[i];
      const double n = static_cast<double>(blk.n);
      const double np = static_cast<double>(blk.n_prime);
      bool ok = true;
      for (int a = 0; a < degree; ++a) {
        const auto diag =
            detail::couple_normals(n, 2.0 * n, np + blk.shift, 2.0 * np, ts);
        ok = ok && diag.coupled;
        for (int b = a + 1; b < degree; ++b) {
          const auto off = detail::couple_normals(0.0, n, 0.0, np, ts);
          ok = ok && off.coupled;
        }
      }
      fail[static_cast<std::size_t>(t) * nb + i] = ok ? 0 : 1;
    }
  });

  CouplingReport out;
  out.trials = trials;
  out.block_failure.assign(nb, 0.0);
  for (std::int64_t t = 0; t < trials; ++t) {
    bool all_ok = true;
    for (std::size_t i = 0; i < nb; ++i) {
      if (fail[static_cast<std::size_t>(t) * nb + i]) {
        out.block_failure[i] += 1.0;
        all_ok = false;
      }
    }
    if (all_ok) ++out.all_coupled;
  }
  for (double& f : out.block_failure) f /= static_cast<double>(trials);
  out.rate = static_cast<double>(out.all_coupled) / static_cast<double>(trials);
  out.ci = stats::wilson(out.all_coupled, trials);
  return out;
}

struct SeparationRow {
  Eigen::Index n = 0;
  double test_error = 0.5;
  double advantage = 0.0;  // |1 - 2 error|, zero when the classes are indistinguishable
};

namespace detail {

// log of the multivariate gamma function Gamma_k(a).
inline double log_multigamma(int k, double a) {
  double out = 0.25 * static_cast<double>(k) * static_cast<double>(k - 1) * std::log(kPi);
  for (int j = 1; j <= k; ++j) out += std::lgamma(a + 0.5 * static_cast<double>(1 - j));
  return out;
}

// Log density of the k x k Wishart(k, n) law at w, -inf off the SPD cone.
inline double log_wishart_density(const Eigen::MatrixXd& w, double n) {
  const int k = static_cast<int>(w.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (int i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * (n - k - 1) * logdet - 0.5 * w.trace() - 0.5 * n * k * std::log(2.0) -
         log_multigamma(k, 0.5 * n);
}

// Log density of the surrogate n I + sqrt(2n) G at w, with G drawn from the
// GOE used here (unit diagonal variance, half off the diagonal). The change
// of variables from G to w contributes a constant Jacobian.
inline double log_surrogate_density(const Eigen::MatrixXd& w, double n) {
  const int k = static_cast<int>(w.rows());
  const Eigen::MatrixXd g =
      (w - n * Eigen::MatrixXd::Identity(k, k)) / std::sqrt(2.0 * n);
  const double quad = -0.5 * (g * g).trace();
  const double norm = -0.5 * k * std::log(2.0 * kPi) -
                      0.25 * k * (k - 1) * std::log(kPi) -
                      0.25 * k * (k + 1) * std::log(2.0 * n);
  return quad + norm;
}

}  // namespace detail

// Error of the exact likelihood-ratio rule telling a k x k Wishart block
// with n columns from its Gaussian surrogate n I + sqrt(2n) GOE. Both class
// densities are closed-form, so the rule is the best possible test and its
// error estimates (1 - TV)/2; the advantage |1 - 2 err| tracks the total
// variation between the two laws, which fades like k^{3/2}/sqrt(n) as the
// column count grows. A draw outside the SPD cone (possible for the
// surrogate at small n) has Wishart density zero and is classified as
// surrogate outright.
inline std::vector<SeparationRow> wishart_goe_classifier(int degree,
                                                         const std::vector<Eigen::Index>& n_grid,
                                                         std::int64_t per_side,
                                                         rng::Stream& stream) {
  LCSLAB_REQUIRE(degree >= 1, "wishart_goe_classifier: degree >= 1");
  LCSLAB_REQUIRE(per_side >= 40, "wishart_goe_classifier: need per-side count >= 40");
  LCSLAB_REQUIRE(!n_grid.empty(), "wishart_goe_classifier: empty grid");
  for (Eigen::Index n : n_grid)
    LCSLAB_REQUIRE(n >= degree, "wishart_goe_classifier: n must be >= degree");

  const Eigen::Index k = degree;

  std::vector<SeparationRow> rows;
  rows.reserve(n_grid.size());
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const Eigen::Index n = n_grid[gi];
    rng::Stream gs = stream.child(static_cast<std::uint64_t>(gi));
    const double sn = static_cast<double>(n);

    auto llr = [&](const Eigen::MatrixXd& w) {
      return detail::log_wishart_density(w, sn) - detail::log_surrogate_density(w, sn);
    };

    std::int64_t wrong = 0;
    for (Eigen::Index s = 0; s < per_side; ++s) {
      const Eigen::MatrixXd wa = wishart::sample_wishart_rect(k, n, gs);
      const Eigen::MatrixXd wb = sn * Eigen::MatrixXd::Identity(k, k) +
                                 std::sqrt(2.0 * sn) * wishart::sample_goe(k, gs);
      if (!(llr(wa) > 0.0)) ++wrong;
      if (llr(wb) > 0.0) ++wrong;
    }
    SeparationRow row;
    row.n = n;
    row.test_error = static_cast<double>(wrong) / static_cast<double>(2 * per_side);
    row.advantage = std::abs(1.0 - 2.0 * row.test_error);
    rows.push_back(row);
  }
  return rows;
}

// Nearest-trace rule with ties resolved toward the first hypothesis.
// Equivalent to thresholding at the midpoint of the two traces.
inline int single_sample_distinguisher(double value, double trace_a, double trace_b) {
  return (std::abs(value - trace_a) <= std::abs(value - trace_b)) ? 0 : 1;
}

struct DistinguisherReport {
  std::int64_t trials = 0;
  std::int64_t correct = 0;
  double accuracy = 0.0;
  stats::Interval ci;
  double trace_a = 0.0;
  double trace_b = 0.0;
  double gap = 0.0;
  double noise_sd = 0.0;  // larger of the two norm standard deviations
};

// Each trial picks one side fairly, draws a single exact sample of the
// zero-mean Gaussian with that inverse operator as covariance, and guesses
// from the squared norm alone. The norm's law is rotation invariant, so it
// is simulated in the diagonal frame: sum over nodes of chi-squared mass
// divided by the node.
inline DistinguisherReport distinguisher_experiment(const HardPair& hp, std::int64_t trials,
                                                    rng::Stream& stream) {
  LCSLAB_REQUIRE(hp.n.size() == hp.lambda.size(), "distinguisher: pair has not been rounded");
  LCSLAB_REQUIRE(trials >= 1, "distinguisher: trials >= 1");
  const Eigen::Index count = hp.lambda.size();

  DistinguisherReport out;
  out.trials = trials;
  double var_a = 0.0, var_b = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    out.trace_a += static_cast<double>(hp.n[i]) / hp.lambda[i];
    out.trace_b += static_cast<double>(hp.n_prime[i]) / hp.lambda[i];
    var_a += 2.0 * static_cast<double>(hp.n[i]) / (hp.lambda[i] * hp.lambda[i]);
    var_b += 2.0 * static_cast<double>(hp.n_prime[i]) / (hp.lambda[i] * hp.lambda[i]);
  }
  out.gap = std::abs(out.trace_a - out.trace_b);
  out.noise_sd = std::sqrt(std::max(var_a, var_b));

  std::vector<std::uint8_t> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const int truth = static_cast<int>(ts.next_u64() & 1ull);
    const Eigen::VectorXi& counts = (truth == 0) ? hp.n : hp.n_prime;
    double value = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
      double chi = 0.0;
      for (int r = 0; r < counts[i]; ++r) {
        const double z = ts.normal();
        chi += z * z;
      }
      value += chi / hp.lambda[i];
    }
    const int guess = single_sample_distinguisher(value, out.trace_a, out.trace_b);
    hit[static_cast<std::size_t>(t)] = (guess == truth) ? 1 : 0;
  });

  for (auto h : hit) out.correct += h;
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(trials);
  out.ci = stats::wilson(out.correct, trials);
  return out;
}

}  // namespace lcslab::hard_pair
