#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "lcslab/common.hpp"

namespace lcslab::cheb {

// T_k evaluated anywhere on the real line. The trig/hyperbolic branches agree
// at |x| = 1 (both give 1 or (-1)^k exactly).
inline double cheb_value(int k, double x) {
  LCSLAB_REQUIRE(k >= 0, "cheb_value: negative degree");
  if (std::abs(x) <= 1.0) return std::cos(k * std::acos(x));
  const double body = std::cosh(k * std::acosh(std::abs(x)));
  return (x < 0.0 && (k % 2 == 1)) ? -body : body;
}

// Outside [-1, 1], |T_k| is bounded by (|x| + sqrt(x^2 - 1))^k; used as a
// sanity envelope in tests.
inline double cheb_growth_envelope(int k, double x) {
  const double a = std::abs(x);
  if (a <= 1.0) return 1.0;
  return std::pow(a + std::sqrt(a * a - 1.0), k);
}

// Polynomial in the Chebyshev basis of an interval [lo, hi]:
//   p(x) = sum_j c_j T_j(t),  t = (2x - lo - hi) / (hi - lo).
// All polynomial arithmetic in this project stays in this basis; monomial
// coefficients never materialize.
class ChebyshevPolynomial {
 public:
  ChebyshevPolynomial() : lo_(-1.0), hi_(1.0), c_{0.0} {}

  ChebyshevPolynomial(double lo, double hi, std::vector<double> coeffs)
      : lo_(lo), hi_(hi), c_(std::move(coeffs)) {
    LCSLAB_REQUIRE(lo_ < hi_, "chebyshev domain must satisfy lo < hi");
    if (c_.empty()) c_.push_back(0.0);
  }

  // Interpolates f at the degree+1 Chebyshev-Lobatto points of [lo, hi].
  // Exact (to rounding) whenever f is a polynomial of degree <= degree.
  static ChebyshevPolynomial from_function(const std::function<double(double)>& f, double lo,
                                           double hi, int degree) {
    LCSLAB_REQUIRE(degree >= 0, "from_function: negative degree");
    if (degree == 0)
      return ChebyshevPolynomial(lo, hi, {f(0.5 * (lo + hi))});
    const int n = degree;
    std::vector<double> g(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
      const double t = std::cos(M_PI * k / n);
      g[static_cast<std::size_t>(k)] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
    }
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j <= n; ++j) {
      double acc = 0.5 * (g[0] + ((j % 2 == 0) ? g[static_cast<std::size_t>(n)]
                                               : -g[static_cast<std::size_t>(n)]));
      for (int k = 1; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * std::cos(M_PI * j * k / n);
      c[static_cast<std::size_t>(j)] = 2.0 * acc / n;
    }
    c[0] *= 0.5;
    c[static_cast<std::size_t>(n)] *= 0.5;
    return ChebyshevPolynomial(lo, hi, std::move(c));
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coefficients() const { return c_; }

  double to_unit(double x) const { return (2.0 * x - lo_ - hi_) / (hi_ - lo_); }

  // Clenshaw backward recurrence.
  double operator()(double x) const {
    const double t = to_unit(x);
    double b1 = 0.0, b2 = 0.0;
    for (int j = degree(); j >= 1; --j) {
      const double b = 2.0 * t * b1 - b2 + c_[static_cast<std::size_t>(j)];
      b2 = b1;
      b1 = b;
    }
    return t * b1 - b2 + c_[0];
  }

  ChebyshevPolynomial& operator+=(const ChebyshevPolynomial& other) {
    LCSLAB_REQUIRE(lo_ == other.lo_ && hi_ == other.hi_, "chebyshev add: domain mismatch");
    if (other.c_.size() > c_.size()) c_.resize(other.c_.size(), 0.0);
    for (std::size_t j = 0; j < other.c_.size(); ++j) c_[j] += other.c_[j];
    return *this;
  }

  ChebyshevPolynomial& scale(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }

 private:
  double lo_, hi_;
  std::vector<double> c_;
};

// Max |p(x) - f(x)| over a uniform certification grid (endpoints included).
inline double grid_max_error(const ChebyshevPolynomial& p, const std::function<double(double)>& f,
                             int points = 10001) {
  LCSLAB_REQUIRE(points >= 2, "grid_max_error: need >= 2 points");
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = p.lo() + (p.hi() - p.lo()) * static_cast<double>(i) / (points - 1);
    worst = std::max(worst, std::abs(p(x) - f(x)));
  }
  return worst;
}

struct CertifiedApprox {
  ChebyshevPolynomial poly;
  int degree = 0;
  double tolerance = 0.0;       // requested uniform error bound
  double measured_error = 0.0;  // certified on the grid
};

// Low-degree uniform approximation of x^s on [-1, 1]: expand x^s exactly in
// the Chebyshev basis (binomial weights), drop terms above the target degree
// ceil(sqrt(2 s ln(2/delta))). The dropped mass is at most delta; the result
// is re-certified on the grid regardless.
inline CertifiedApprox monomial_approx(int s, double delta) {
  LCSLAB_REQUIRE(s >= 1, "monomial_approx: s >= 1");
  LCSLAB_REQUIRE(delta > 0.0 && delta < 1.0, "monomial_approx: delta in (0, 1)");
  int degree = static_cast<int>(std::ceil(std::sqrt(2.0 * s * std::log(2.0 / delta))));
  degree = std::min(degree, s);
  // x^s = 2^{1-s} sum_{k=0}^{floor(s/2)} C(s, k) T_{s-2k}, with the T_0 term
  // (k = s/2, s even) halved. Coefficients via lgamma to avoid overflow.
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  const double log2 = std::log(2.0);
  for (int k = 0; 2 * k <= s; ++k) {
    const int j = s - 2 * k;
    if (j > degree) continue;
    double logw = std::lgamma(s + 1.0) - std::lgamma(k + 1.0) - std::lgamma(s - k + 1.0) +
                  (1.0 - s) * log2;
    double w = std::exp(logw);
    if (j == 0) w *= 0.5;
    c[static_cast<std::size_t>(j)] += w;
  }
  CertifiedApprox out;
  out.poly = ChebyshevPolynomial(-1.0, 1.0, std::move(c));
  out.degree = degree;
  out.tolerance = delta;
  out.measured_error = grid_max_error(out.poly, [s](double x) { return std::pow(x, s); });
  LCSLAB_CHECK_NUMERIC(out.measured_error <= delta,
                       "monomial_approx: certification failed on the grid");
  return out;
}

// Uniform approximation of x^{-1/2} on [1, kappa] to tolerance delta/sqrt(kappa),
// built by Chebyshev interpolation with a doubling-then-bisection search for
// the smallest grid-certified degree.
inline CertifiedApprox inv_sqrt_approx(double kappa, double delta) {
  LCSLAB_REQUIRE(kappa >= 2.0, "inv_sqrt_approx: kappa >= 2");
  LCSLAB_REQUIRE(delta > 0.0 && delta <= 0.5, "inv_sqrt_approx: delta in (0, 1/2]");
  const double tol = delta / std::sqrt(kappa);
  const auto f = [](double x) { return 1.0 / std::sqrt(x); };
  const double degree_cap = 64.0 * std::sqrt(kappa) * std::log(kappa / delta);
  auto certifies = [&](int deg) {
    return grid_max_error(ChebyshevPolynomial::from_function(f, 1.0, kappa, deg), f) <= tol;
  };
  int hi = 1;
  while (!certifies(hi)) {
    hi *= 2;
    LCSLAB_CHECK_NUMERIC(hi <= degree_cap, "inv_sqrt_approx: degree search exceeded cap");
  }
  int lo = hi / 2;  // lo failed (or hi == 1)
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (certifies(mid) ? hi : lo) = mid;
  }
  CertifiedApprox out;
  out.poly = ChebyshevPolynomial::from_function(f, 1.0, kappa, hi);
  out.degree = hi;
  out.tolerance = tol;
  out.measured_error = grid_max_error(out.poly, f);
  LCSLAB_CHECK_NUMERIC(out.measured_error <= tol, "inv_sqrt_approx: certification failed");
  return out;
}

// Reference construction for the same target: truncated Taylor series of
// (1 + y)^{-1/2} with each monomial y^t replaced by its low-degree surrogate,
// then mapped onto [1, kappa]. Kept as an independent cross-check of the
// interpolation path; much higher degree, same certified tolerance.
inline CertifiedApprox inv_sqrt_approx_reference(double kappa, double delta) {
  LCSLAB_REQUIRE(kappa >= 2.0, "inv_sqrt_approx_reference: kappa >= 2");
  LCSLAB_REQUIRE(delta > 0.0 && delta <= 0.5, "inv_sqrt_approx_reference: delta in (0, 1/2]");
  const int taylor_len = static_cast<int>(std::ceil(kappa * std::log(2.0 * kappa / delta)));
  ChebyshevPolynomial sum(-1.0, 1.0, {1.0});
  double coeff = 1.0;  // c_t = (-1)^t C(2t, t) / 4^t, built incrementally
  for (int t = 1; t <= taylor_len; ++t) {
    coeff *= -(2.0 * t - 1.0) / (2.0 * t);
    const double delta_t = delta / (4.0 * t * t);
    CertifiedApprox p = monomial_approx(t, delta_t);
    sum += p.poly.scale(coeff);
  }
  // q(x) = sum(x / kappa - 1) / sqrt(kappa); re-expanding by interpolation at
  // matching degree is exact for polynomials.
  const double root = std::sqrt(kappa);
  auto q_fn = [&](double x) { return sum(x / kappa - 1.0) / root; };
  CertifiedApprox out;
  out.poly = ChebyshevPolynomial::from_function(q_fn, 1.0, kappa, sum.degree());
  out.degree = sum.degree();
  out.tolerance = delta / root;
  out.measured_error = grid_max_error(out.poly, [](double x) { return 1.0 / std::sqrt(x); });
  LCSLAB_CHECK_NUMERIC(out.measured_error <= out.tolerance,
                       "inv_sqrt_approx_reference: certification failed");
  return out;
}

// The K+2 scaled extrema of T_{K+1}: lambda_i = (kappa-1)/2 (beta_i + 1) + 1
// with beta_i = cos(i pi / (K+1)) descending, so lambda runs kappa -> 1.
struct NodeSet {
  int degree = 0;          // K
  double kappa = 1.0;
  Eigen::VectorXd beta;    // descending in [-1, 1]
  Eigen::VectorXd lambda;  // descending in [1, kappa]
};

inline NodeSet extrema_nodes(int degree, double kappa) {
  LCSLAB_REQUIRE(degree >= 0, "extrema_nodes: degree >= 0");
  LCSLAB_REQUIRE(kappa > 1.0, "extrema_nodes: kappa > 1");
  NodeSet ns;
  ns.degree = degree;
  ns.kappa = kappa;
  const int count = degree + 2;
  ns.beta.resize(count);
  ns.lambda.resize(count);
  for (int i = 0; i < count; ++i) {
    double b = std::cos(M_PI * i / (count - 1));
    if (i == 0) b = 1.0;
    if (i == count - 1) b = -1.0;
    ns.beta[i] = b;
    ns.lambda[i] = 0.5 * (kappa - 1.0) * (b + 1.0) + 1.0;
  }
  ns.lambda[0] = kappa;
  ns.lambda[count - 1] = 1.0;
  return ns;
}

struct MinimaxResult {
  double error = 0.0;            // E = min_P max_i |f(x_i) - P(x_i)|
  ChebyshevPolynomial poly;      // the optimal P
  Eigen::VectorXd residuals;     // f(x_i) - P(x_i) at every node
};

// Best uniform approximation of f on a finite node set by polynomials of the
// given degree, via Remez exchange over references of size degree+2. When the
// node count equals degree+2 this reduces to a single equioscillation solve.
inline MinimaxResult finite_minimax(const Eigen::VectorXd& nodes, int degree,
                                    const std::function<double(double)>& f = [](double x) {
                                      return 1.0 / x;
                                    }) {
  const int n = static_cast<int>(nodes.size());
  LCSLAB_REQUIRE(degree >= 0, "finite_minimax: degree >= 0");
  LCSLAB_REQUIRE(n >= degree + 2, "finite_minimax: need at least degree+2 nodes");
  std::vector<double> xs(nodes.data(), nodes.data() + n);
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i + 1 < n; ++i)
    LCSLAB_CHECK_NUMERIC(xs[static_cast<std::size_t>(i)] != xs[static_cast<std::size_t>(i + 1)],
                         "finite_minimax: duplicate nodes make the system singular");
  const double lo = xs.front(), hi = xs.back();

  // Reference: indices into xs, ascending, size degree+2. Start spread evenly.
  const int rsize = degree + 2;
  std::vector<int> ref(static_cast<std::size_t>(rsize));
  for (int i = 0; i < rsize; ++i)
    ref[static_cast<std::size_t>(i)] = (n == rsize) ? i : (i * (n - 1)) / (rsize - 1);

  ChebyshevPolynomial poly;
  double level = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    // Solve f(x_t) - sum_j c_j That_j(x_t) = (-1)^t E on the reference.
    Eigen::MatrixXd a(rsize, rsize);
    Eigen::VectorXd b(rsize);
    for (int t = 0; t < rsize; ++t) {
      const double x = xs[static_cast<std::size_t>(ref[static_cast<std::size_t>(t)])];
      const double u = (2.0 * x - lo - hi) / (hi - lo);
      for (int j = 0; j <= degree; ++j) a(t, j) = cheb_value(j, u);
      a(t, degree + 1) = (t % 2 == 0) ? 1.0 : -1.0;
      b[t] = f(x);
    }
    Eigen::VectorXd sol = a.fullPivLu().solve(b);
    LCSLAB_CHECK_NUMERIC(sol.allFinite(), "finite_minimax: singular alternation system");
    std::vector<double> coeffs(sol.data(), sol.data() + degree + 1);
    poly = ChebyshevPolynomial(lo, hi, std::move(coeffs));
    level = std::abs(sol[degree + 1]);

    // Exchange: admit the worst violator while keeping alternation.
    int worst = -1;
    double worst_abs = level * (1.0 + 1e-12) + 1e-15;
    auto resid = [&](int i) { return f(xs[static_cast<std::size_t>(i)]) - poly(xs[static_cast<std::size_t>(i)]); };
    for (int i = 0; i < n; ++i) {
      const double r = std::abs(resid(i));
      if (r > worst_abs) {
        worst_abs = r;
        worst = i;
      }
    }
    if (worst < 0) break;

    const double sign_new = (resid(worst) >= 0.0) ? 1.0 : -1.0;
    auto sign_at = [&](int t) {
      return (resid(ref[static_cast<std::size_t>(t)]) >= 0.0) ? 1.0 : -1.0;
    };
    if (worst < ref.front()) {
      if (sign_new == sign_at(0)) {
        ref.front() = worst;
      } else {
        ref.pop_back();
        ref.insert(ref.begin(), worst);
      }
    } else if (worst > ref.back()) {
      if (sign_new == sign_at(rsize - 1)) {
        ref.back() = worst;
      } else {
        ref.erase(ref.begin());
        ref.push_back(worst);
      }
    } else {
      for (int t = 0; t + 1 < rsize; ++t) {
        if (worst > ref[static_cast<std::size_t>(t)] && worst < ref[static_cast<std::size_t>(t + 1)]) {
          if (sign_new == sign_at(t))
            ref[static_cast<std::size_t>(t)] = worst;
          else
            ref[static_cast<std::size_t>(t + 1)] = worst;
          break;
        }
        if (worst == ref[static_cast<std::size_t>(t)] || worst == ref[static_cast<std::size_t>(t + 1)]) break;
      }
    }
    LCSLAB_CHECK_NUMERIC(iter < 199, "finite_minimax: exchange failed to settle");
  }

  MinimaxResult out;
  out.error = level;
  out.poly = poly;
  out.residuals.resize(nodes.size());
  for (Eigen::Index i = 0; i < nodes.size(); ++i) out.residuals[i] = f(nodes[i]) - poly(nodes[i]);
  return out;
}

}  // namespace lcslab::cheb
