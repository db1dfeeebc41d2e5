#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "lcslab/common.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::stats {

inline double mean(const std::vector<double>& xs) {
  LCSLAB_REQUIRE(!xs.empty(), "mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance, two-pass.
inline double variance(const std::vector<double>& xs) {
  LCSLAB_REQUIRE(xs.size() >= 2, "variance needs >= 2 points");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Standard error of the sample variance via the empirical fourth moment
// (valid without normality assumptions).
inline double variance_stderr(const std::vector<double>& xs) {
  const double m = mean(xs);
  const double n = static_cast<double>(xs.size());
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  const double var_of_var = (m4 - m2 * m2) / n;
  return std::sqrt(std::max(0.0, var_of_var));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion (z = 1.96 -> 95%).
inline Interval wilson(std::int64_t successes, std::int64_t trials, double z = 1.96) {
  LCSLAB_REQUIRE(trials > 0 && successes >= 0 && successes <= trials,
                 "wilson: bad (successes, trials)");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LCSLAB_REQUIRE(x.size() == y.size() && x.size() >= 2, "fit_line: need matched n >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LCSLAB_CHECK_NUMERIC(sxx > 0.0, "fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  (void)n;
  return f;
}

// Total variation distance between two discrete histograms given as
// same-length probability vectors.
inline double binned_tv(const std::vector<double>& p, const std::vector<double>& q) {
  LCSLAB_REQUIRE(p.size() == q.size(), "binned_tv: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

struct EnergyTest {
  double statistic = 0.0;   // energy distance estimate on the observed split
  double p_value = 1.0;     // (1 + #{perm >= obs}) / (1 + permutations)
  int permutations = 0;
};

// Two-sample energy-distance permutation test. The pooled pairwise distance
// matrix is computed once (float storage; statistics accumulate in double).
// Rows of `a` and `b` are observations of equal dimension.
inline EnergyTest energy_permutation_test(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                          int permutations, rng::Stream stream) {
  const std::int64_t n = a.rows(), m = b.rows(), total = n + m;
  LCSLAB_REQUIRE(n >= 2 && m >= 2, "energy test: need >= 2 points per side");
  LCSLAB_REQUIRE(a.cols() == b.cols(), "energy test: dimension mismatch");
  LCSLAB_REQUIRE(permutations >= 1, "energy test: need >= 1 permutation");

  std::vector<float> dist(static_cast<std::size_t>(total) * static_cast<std::size_t>(total), 0.0f);
  auto at = [&](std::int64_t i, std::int64_t j) -> float& {
    return dist[static_cast<std::size_t>(i) * static_cast<std::size_t>(total) + static_cast<std::size_t>(j)];
  };
  auto point = [&](std::int64_t i) {
    return (i < n) ? a.row(i) : b.row(i - n);
  };
  for (std::int64_t i = 0; i < total; ++i)
    for (std::int64_t j = i + 1; j < total; ++j) {
      const float d = static_cast<float>((point(i) - point(j)).norm());
      at(i, j) = d;
      at(j, i) = d;
    }

  double pooled_ordered_sum = 0.0;
  for (std::int64_t i = 0; i < total; ++i)
    for (std::int64_t j = 0; j < total; ++j) pooled_ordered_sum += at(i, j);

  // E = 2/(nm) * B - 1/n^2 * W_a - 1/m^2 * W_b, with B the between-group sum
  // and W_* the (ordered-pair) within sums. The pooled ordered sum is
  // permutation-invariant, so for n == m only B is recomputed per shuffle:
  // E = (4B - S_tot) / n^2.
  auto between_for = [&](const std::vector<std::int32_t>& idx) {
    double between = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < m; ++j) between += at(idx[i], idx[n + j]);
    return between;
  };
  auto statistic_for = [&](const std::vector<std::int32_t>& idx) {
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    if (n == m) return (4.0 * between_for(idx) - pooled_ordered_sum) / (dn * dn);
    double within_a = 0.0, within_b = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = 0; j < n; ++j) within_a += at(idx[i], idx[j]);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) within_b += at(idx[n + i], idx[n + j]);
    const double between = 0.5 * (pooled_ordered_sum - within_a - within_b);
    return 2.0 * between / (dn * dm) - within_a / (dn * dn) - within_b / (dm * dm);
  };

  std::vector<std::int32_t> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0);
  EnergyTest result;
  result.permutations = permutations;
  result.statistic = statistic_for(idx);

  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    stream.shuffle(idx);
    if (statistic_for(idx) >= result.statistic) ++at_least;
  }
  result.p_value = (1.0 + at_least) / (1.0 + permutations);
  return result;
}

}  // namespace lcslab::stats
