#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "lcslab/common.hpp"
#include "lcslab/oracle.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::lowdim {

// E = {x : (x - z)' a (x - z) <= 1} with a symmetric positive definite.
// `dilation` records how far the body has been scaled up relative to the
// certified inner ellipsoid it was derived from (1 for the inner body).
struct Ellipsoid {
  Eigen::VectorXd z;
  Eigen::MatrixXd a;
  double dilation = 1.0;

  Eigen::Index dim() const { return z.size(); }

  double mahalanobis2(const Eigen::VectorXd& x) const {
    Eigen::VectorXd c = x - z;
    return c.dot(a * c);
  }

  bool contains(const Eigen::VectorXd& x) const { return mahalanobis2(x) <= 1.0 + 1e-12; }

  // Scales the body about its center by s >= 1 (semi-axes multiply by s).
  Ellipsoid dilated(double s) const {
    LCSLAB_REQUIRE(s >= 1.0, "ellipsoid dilation factor must be >= 1");
    return {z, a / (s * s), dilation * s};
  }

  // Symmetric factor M with M M' = a^{-1}; x = z + M u maps the unit ball
  // onto the body. Recomputed on every call, so hoist it out of hot loops.
  Eigen::MatrixXd ball_factor() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    LCSLAB_CHECK_NUMERIC(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0,
                         "ellipsoid shape matrix is not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
  }

  double volume() const {
    const Eigen::Index d = dim();
    // vol = vol(unit ball_d) / sqrt(det a)
    const double unit = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    return unit / std::sqrt(a.determinant());
  }
};

// Membership view of a potential: a point is inside the level-1 sublevel set
// iff V(x) <= level; otherwise the gradient acts as a separating halfspace
// normal (below-level points satisfy g . (y - x) < 0 by convexity).
struct SublevelOracle {
  FirstOrderOracle& inner;
  double level = 1.0;
};

struct Membership {
  bool inside = false;
  double value = 0.0;
  Eigen::VectorXd separator;  // populated only when outside
};

// Costs exactly one first-order query.
inline Membership membership_separation(SublevelOracle oracle, const Eigen::VectorXd& x) {
  FirstOrderResponse r = oracle.inner.query(x);
  Membership m;
  m.value = r.value;
  m.inside = r.value <= oracle.level;
  if (!m.inside) m.separator = std::move(r.gradient);
  return m;
}

struct RoundingResult {
  Ellipsoid inner;   // certified subset of the sublevel set
  Ellipsoid outer;   // certified superset; same center and shape as inner
  double dilation = 1.0;  // outer = inner scaled by this factor
  std::int64_t queries = 0;
  int central_cuts = 0;
  int shallow_cuts = 0;
  double sweep_scale = 0.0;  // smallest confirmed boundary scale before the hull margin
};

namespace detail {

// One ellipsoid-method update in covariance form. S is the inverse shape
// matrix (E = {x : (x-z)' S^{-1} (x-z) <= 1}) and the body is known to lie in
// {x : g . x <= c}. alpha in (-1/d, 1) is the signed cut depth; alpha = 0 is
// a central cut. Returns false when the cut is too shallow to shrink.
inline bool apply_cut(Eigen::VectorXd& z, Eigen::MatrixXd& s, const Eigen::VectorXd& g, double c) {
  const double d = static_cast<double>(z.size());
  Eigen::VectorXd sg = s * g;
  const double h2 = g.dot(sg);
  LCSLAB_CHECK_NUMERIC(h2 > 0.0, "ellipsoid cut normal degenerate under current shape");
  const double h = std::sqrt(h2);
  const double alpha = (g.dot(z) - c) / h;
  LCSLAB_CHECK_NUMERIC(alpha < 1.0, "ellipsoid cut empties the body");
  if (alpha <= -1.0 / d) return false;
  const double tau = (1.0 + d * alpha) / (d + 1.0);
  const double sigma = d * d * (1.0 - alpha * alpha) / (d * d - 1.0);
  const double xi = 2.0 * (1.0 + d * alpha) / ((d + 1.0) * (1.0 + alpha));
  z -= (tau / h) * sg;
  s = sigma * (s - (xi / h2) * (sg * sg.transpose()));
  s = 0.5 * (s + s.transpose()).eval();
  return true;
}

inline std::vector<Eigen::VectorXd> sweep_directions(int d) {
  std::vector<Eigen::VectorXd> dirs;
  if (d == 2) {
    for (int k = 0; k < 16; ++k) {
      const double th = kPi * static_cast<double>(k) / 8.0;
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      dirs.push_back(u);
    }
  } else {
    for (int i = 0; i < d; ++i)
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
        u[i] = sign;
        dirs.push_back(u);
      }
  }
  return dirs;
}

}  // namespace detail

// Rounds the sublevel set B = {V <= 1} of a 1-strongly-convex, kappa-smooth
// potential with minimum value 0. Returns ellipsoids E, E' with
// E <= B <= E', where E' is E scaled about the shared center by a factor of
// at most 1.6 d^{3/2}.
//
// The search keeps an outer ellipsoid E_t >= B. While the center is outside
// B, central cuts through the separator shrink E_t. Once the center is
// inside, probe points at Mahalanobis radius s along a fixed direction fan
// either all certify membership (so conv{probes} gives an inner body) or a
// failing probe yields a shallow cut of depth alpha >= -s > -1/d, which still
// shrinks volume. Probe radii are tiered so early cuts are cheap and the
// final tier tightens the certified dilation. A bisection sweep along the
// fan then measures the largest confirmed boundary scale per direction; the
// inner certificate is the polygon (d = 2) or cross-polytope (d >= 3) hull
// bound applied to the worst direction.
inline RoundingResult ellipsoid_round(SublevelOracle oracle, int d, double kappa) {
  LCSLAB_REQUIRE(d >= 2 && d <= 16, "ellipsoid rounding supports dimensions 2 through 16");
  LCSLAB_REQUIRE(kappa >= 1.0, "condition number must be >= 1");
  LCSLAB_REQUIRE(oracle.inner.dim() == d, "oracle dimension mismatch");

  const double radius_outer = std::sqrt(2.0);          // B <= ball(sqrt 2)
  const double radius_inner = std::sqrt(2.0 / kappa);  // ball(sqrt(2/kappa)) <= B
  // Volume-argument budget. The +1 keeps the bound meaningful at kappa = 1,
  // where log(R/r) = 0 but the sweep still spends a few hundred queries.
  const std::int64_t budget =
      256LL * d * d * (d + 1) *
      static_cast<std::int64_t>(std::ceil(1.0 + std::log(radius_outer / radius_inner)));

  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd s = 2.0 * Eigen::MatrixXd::Identity(d, d);  // ball(sqrt 2)

  const std::vector<Eigen::VectorXd> dirs = detail::sweep_directions(d);
  const double hull_factor = (d == 2) ? std::cos(kPi / 16.0) : 1.0 / std::sqrt(d);
  std::vector<double> targets;
  if (d == 2)
    targets = {1.0 / 3.0, 0.42};
  else
    targets = {1.0 / (d + 1.0)};

  RoundingResult out;
  const std::int64_t base_count = oracle.inner.query_count();
  auto spent = [&] { return oracle.inner.query_count() - base_count; };

  Eigen::MatrixXd factor;  // M with M M' = S, refreshed after each cut
  auto refresh_factor = [&] {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    LCSLAB_CHECK_NUMERIC(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0,
                         "rounding ellipsoid lost positive definiteness");
    factor = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose();
  };
  refresh_factor();

  std::size_t next_dir = 0;  // resume scanning at the last failing direction
  for (double target : targets) {
    while (true) {
      LCSLAB_CHECK_NUMERIC(spent() <= budget, "ellipsoid rounding query budget exceeded");
      Membership center = membership_separation(oracle, z);
      if (!center.inside) {
        LCSLAB_CHECK_NUMERIC(detail::apply_cut(z, s, center.separator, center.separator.dot(z)),
                             "central cut failed to make progress");
        ++out.central_cuts;
        refresh_factor();
        continue;
      }
      bool cut_made = false;
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const std::size_t idx = (next_dir + k) % dirs.size();
        Eigen::VectorXd probe = z + target * (factor * dirs[idx]);
        Membership m = membership_separation(oracle, probe);
        if (m.inside) continue;
        LCSLAB_CHECK_NUMERIC(detail::apply_cut(z, s, m.separator, m.separator.dot(probe)),
                             "shallow probe cut failed to make progress");
        ++out.shallow_cuts;
        refresh_factor();
        next_dir = idx;
        cut_made = true;
        break;
      }
      if (!cut_made) break;
    }
  }

  // Certificate sweep: largest confirmed in-set scale per direction.
  const double base = targets.back();
  double sweep_min = 1.0;
  for (const Eigen::VectorXd& u : dirs) {
    Eigen::VectorXd axis = factor * u;
    Membership at_base = membership_separation(oracle, z + base * axis);
    LCSLAB_CHECK_NUMERIC(at_base.inside, "probe certificate no longer holds during sweep");
    double lo = base, hi = 1.0;
    if (membership_separation(oracle, z + axis).inside) {
      lo = 1.0;
    } else {
      for (int it = 0; it < 15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (membership_separation(oracle, z + mid * axis).inside)
          lo = mid;
        else
          hi = mid;
      }
    }
    sweep_min = std::min(sweep_min, lo);
  }
  LCSLAB_CHECK_NUMERIC(spent() <= budget, "ellipsoid rounding query budget exceeded");

  const double scale = hull_factor * sweep_min;
  out.sweep_scale = sweep_min;
  out.dilation = 1.0 / scale;
  LCSLAB_CHECK_NUMERIC(out.dilation <= 1.6 * std::pow(d, 1.5) + 1e-9,
                       "rounding dilation certificate violated");
  Eigen::MatrixXd shape = s.inverse();
  shape = 0.5 * (shape + shape.transpose()).eval();
  out.inner = Ellipsoid{z, shape / (scale * scale), 1.0};
  out.outer = Ellipsoid{z, shape, out.dilation};
  out.queries = spent();
  return out;
}

// Uniform draw from an ellipsoid: Gaussian direction, radius u^{1/d}, mapped
// through the shape factorization.
inline Eigen::VectorXd uniform_in_ellipsoid(const Ellipsoid& e, rng::Stream& stream) {
  const Eigen::Index d = e.dim();
  Eigen::MatrixXd m = e.ball_factor();
  Eigen::VectorXd g(d);
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) g[i] = stream.normal();
    norm2 = g.squaredNorm();
  } while (norm2 == 0.0);
  const double r = std::pow(stream.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(norm2);
  return e.z + r * (m * g);
}

// Rejection sampler for exp(-V) restricted to t E', where t makes the mass
// outside negligible at accuracy eps. Proposals are uniform in t E' and are
// accepted with probability exp(-V); the accepted law is exactly the target
// conditioned on t E'. Construction cost is one factorization; each proposal
// costs one value query.
class RejectionSampler {
 public:
  static constexpr std::int64_t kProposalBudget = 100'000'000;

  RejectionSampler(FirstOrderOracle& oracle, const Ellipsoid& outer, double eps)
      : oracle_(oracle), d_(static_cast<int>(outer.dim())) {
    LCSLAB_REQUIRE(eps > 0.0 && eps < 1.0, "rejection sampler accuracy must lie in (0, 1)");
    LCSLAB_REQUIRE(oracle.dim() == outer.dim(), "oracle and ellipsoid dimension mismatch");
    t_ = static_cast<int>(std::ceil(4.0 * (d_ * std::log(d_) + std::log(1.0 / eps)) + 8.0));
    const Ellipsoid domain = outer.dilated(t_);
    center_ = domain.z;
    factor_ = domain.ball_factor();
    g_.resize(d_);
    x_.resize(d_);
  }

  int t() const { return t_; }
  std::int64_t proposals() const { return proposals_; }

  const Eigen::VectorXd& sample(rng::Stream& stream) {
    for (std::int64_t attempt = 0; attempt < kProposalBudget; ++attempt) {
      double norm2 = 0.0;
      do {
        for (int i = 0; i < d_; ++i) g_[i] = stream.normal();
        norm2 = g_.squaredNorm();
      } while (norm2 == 0.0);
      const double u = stream.uniform();
      const double r =
          (d_ == 2 ? std::sqrt(u) : std::pow(u, 1.0 / d_)) / std::sqrt(norm2);
      x_.noalias() = factor_ * g_;
      x_ = center_ + r * x_;
      ++proposals_;
      const double v = oracle_.query_value(x_);
      if (stream.uniform() < std::exp(-v)) return x_;
    }
    LCSLAB_CHECK_NUMERIC(false, "rejection sampler exceeded its proposal budget");
    return x_;  // unreachable
  }

 private:
  FirstOrderOracle& oracle_;
  int d_ = 0;
  int t_ = 0;
  std::int64_t proposals_ = 0;
  Eigen::VectorXd center_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd g_, x_;
};

inline Eigen::VectorXd rejection_sample(FirstOrderOracle& oracle, const Ellipsoid& outer,
                                        double eps, rng::Stream& stream) {
  RejectionSampler sampler(oracle, outer, eps);
  return sampler.sample(stream);
}

}  // namespace lcslab::lowdim
