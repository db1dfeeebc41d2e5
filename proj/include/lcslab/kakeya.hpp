#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcslab/common.hpp"
#include "lcslab/quadrature.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::kakeya {

// Slab-agreement margins. The wide margin is what survives mollification and
// is also the resolution of the bit-leak oracle; both stay configurable at
// call sites that take them as parameters.
inline constexpr double kAgreementMargin = 100.0;
inline constexpr double kWideAgreementMargin = 200.0;
inline constexpr double kAgreementSmallX = 0.25;   // factor of 2^-3N below which x is blind
inline constexpr double kWideAgreementSmallX = 0.125;
inline constexpr double kZeroNeighborhoodFactor = 1000.0;  // delta multiples kept inside the zero set

// Binary string b = b_1..b_N with exact dyadic prefix values
//   [b]_l = sum_{i<=l} b_i 2^{-(i+2)},
// clamped to [b]_N for l > N. b_i sits at bit (N - i) of the raw word, so the
// numerator of [b]_l over 2^{l+2} is a plain right shift and every prefix
// value is a double with at most N+2 mantissa bits: exact.
class BitString {
 public:
  BitString(int n, std::uint64_t bits) : n_(n), bits_(bits) {
    LCSLAB_REQUIRE(n >= 1 && n <= 60, "bit string length out of range");
    LCSLAB_REQUIRE(bits < (std::uint64_t{1} << n), "bits wider than the declared length");
  }

  static BitString parse(std::string_view text) {
    LCSLAB_REQUIRE(!text.empty() && text.size() <= 60, "bit string literal length out of range");
    std::uint64_t bits = 0;
    for (char c : text) {
      LCSLAB_REQUIRE(c == '0' || c == '1', "bit string literal must be over {0,1}");
      bits = (bits << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return BitString(static_cast<int>(text.size()), bits);
  }

  static BitString random(int n, rng::Stream& stream) {
    LCSLAB_REQUIRE(n >= 1 && n <= 60, "bit string length out of range");
    return BitString(n, stream.next_u64() & ((std::uint64_t{1} << n) - 1));
  }

  int size() const { return n_; }
  std::uint64_t raw() const { return bits_; }

  // b_i, 1-indexed.
  int bit(int i) const {
    LCSLAB_REQUIRE(i >= 1 && i <= n_, "bit index out of range");
    return static_cast<int>((bits_ >> (n_ - i)) & 1u);
  }

  // Numerator of [b]_l over 2^{min(l,N)+2}.
  std::uint64_t prefix_numerator(int l) const {
    LCSLAB_REQUIRE(l >= 0, "prefix length must be non-negative");
    const int m = std::min(l, n_);
    return bits_ >> (n_ - m);
  }

  // Exact dyadic value of [b]_l; equals the full value for l >= N.
  double prefix_value(int l) const {
    const int m = std::min(l, n_);
    return std::ldexp(static_cast<double>(prefix_numerator(m)), -(m + 2));
  }

  double value() const { return prefix_value(n_); }

  BitString prefix(int l) const {
    LCSLAB_REQUIRE(l >= 1 && l <= n_, "prefix length out of range");
    return BitString(l, bits_ >> (n_ - l));
  }

  BitString complement() const {
    return BitString(n_, ~bits_ & ((std::uint64_t{1} << n_) - 1));
  }

  int common_prefix_length(const BitString& other) const {
    const int m = std::min(n_, other.n_);
    int l = 0;
    while (l < m && bit(l + 1) == other.bit(l + 1)) ++l;
    return l;
  }

  std::string to_string() const {
    std::string s(static_cast<std::size_t>(n_), '0');
    for (int i = 1; i <= n_; ++i) s[static_cast<std::size_t>(i - 1)] = bit(i) ? '1' : '0';
    return s;
  }

  bool operator==(const BitString& o) const { return n_ == o.n_ && bits_ == o.bits_; }
  bool operator!=(const BitString& o) const { return !(*this == o); }

 private:
  int n_;
  std::uint64_t bits_;
};

// Scale constants of the potential family. The paper-exponent profile is
// slope_scale = 2^{7N}, quad_scale = 2^{-16N}/2, delta = 2^{-5N}; reduced
// profiles keep the geometry (slab slopes and thicknesses depend only on N)
// while taming the scales so exp(-V) keeps meaningful double range for
// quadrature work. The mollifier divides by the disk area by default; the
// switch restores the literal indicator convolution, which only multiplies
// the mollified part by pi delta^2.
struct ExponentProfile {
  double slope_scale = 1.0;
  double quad_scale = 0.0;
  double delta = 1.0;
  bool normalized_mollifier = true;
  bool paper_exponents = false;

  static ExponentProfile paper(int n) {
    LCSLAB_REQUIRE(n >= 1 && n <= 12, "paper exponent profile needs 1 <= N <= 12");
    ExponentProfile p;
    p.slope_scale = std::ldexp(1.0, 7 * n);
    p.quad_scale = 0.5 * std::ldexp(1.0, -16 * n);
    p.delta = std::ldexp(1.0, -5 * n);
    p.paper_exponents = true;
    return p;
  }

  static ExponentProfile reduced(int p_slope, int p_quad, int p_delta) {
    LCSLAB_REQUIRE(p_slope >= 0 && p_slope <= 60, "reduced profile: slope exponent out of range");
    LCSLAB_REQUIRE(p_quad >= 0 && p_quad <= 200, "reduced profile: quad exponent out of range");
    LCSLAB_REQUIRE(p_delta >= 1 && p_delta <= 200, "reduced profile: delta exponent out of range");
    ExponentProfile p;
    p.slope_scale = std::ldexp(1.0, p_slope);
    p.quad_scale = 0.5 * std::ldexp(1.0, -p_quad);
    p.delta = std::ldexp(1.0, -p_delta);
    return p;
  }
};

namespace detail {

struct DiskNode {
  double dx, dy, w;
};

// Unit-disk average rule: center node plus 8 rings of 7 points. The center
// owns the innermost 1/64 of the area, the rings split the rest evenly and
// sit at the area midline of their annulus; ring r is rotated by r*pi/7 to
// break angular alignment. Ring points are angularly symmetric and the
// weights sum to one, so the rule is exact on affine integrands.
inline const std::array<DiskNode, 57>& disk_rule() {
  static const std::array<DiskNode, 57> rule = [] {
    std::array<DiskNode, 57> r{};
    r[0] = DiskNode{0.0, 0.0, 1.0 / 64.0};
    std::size_t idx = 1;
    for (int ring = 1; ring <= 8; ++ring) {
      const double area_frac = (1.0 + (ring - 0.5) * 63.0 / 8.0) / 64.0;
      const double rho = std::sqrt(area_frac);
      const double w = 63.0 / (64.0 * 8.0 * 7.0);
      for (int m = 0; m < 7; ++m) {
        const double theta = 2.0 * kPi * m / 7.0 + ring * kPi / 7.0;
        r[idx++] = DiskNode{rho * std::cos(theta), rho * std::sin(theta), w};
      }
    }
    return r;
  }();
  return rule;
}

}  // namespace detail

// The two-dimensional potential hiding the bits of b:
//   phi_k(x, y) = (|y - [b]_k x| - (2^{-k} x + 2^{-(3N-k)}))_+ ,   1 <= k <= N,
//   v_tilde     = slope_scale * max_k 2^{-k} phi_k,
//   v_full      = disk-average of v_tilde at radius delta + quad_scale |.|^2.
// Every slab parameter is an exact dyadic, and scaling by powers of two never
// rounds, so two strings sharing a prefix produce bitwise identical values
// wherever only the shared scales can win the max.
class KakeyaPotential {
 public:
  KakeyaPotential(BitString b, ExponentProfile profile) : b_(b), prof_(profile) {
    LCSLAB_REQUIRE(prof_.delta > 0.0, "potential profile needs a positive mollification radius");
    const int n = b_.size();
    bk_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    slope_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    thick_.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
      bk_[static_cast<std::size_t>(k)] = b_.prefix_value(k);
      slope_[static_cast<std::size_t>(k)] = std::ldexp(1.0, -k);
      thick_[static_cast<std::size_t>(k)] = std::ldexp(1.0, -(3 * n - k));
    }
    moll_.reserve(57);
    for (const auto& node : detail::disk_rule())
      moll_.push_back(detail::DiskNode{prof_.delta * node.dx, prof_.delta * node.dy, node.w});
  }

  explicit KakeyaPotential(BitString b) : KakeyaPotential(b, ExponentProfile::paper(b.size())) {}

  const BitString& bits() const { return b_; }
  int n() const { return b_.size(); }
  double kappa() const { return std::ldexp(1.0, b_.size()); }
  const ExponentProfile& profile() const { return prof_; }

  double phi(int k, double x, double y) const {
    LCSLAB_REQUIRE(k >= 1 && k <= b_.size(), "phi: scale index out of range");
    const std::size_t kk = static_cast<std::size_t>(k);
    const double margin = std::abs(y - bk_[kk] * x) - (slope_[kk] * x + thick_[kk]);
    return margin > 0.0 ? margin : 0.0;
  }

  // max_{k <= k_max} 2^{-k} phi_k before the slope scaling; k_max < N gives
  // the coarse-scale potentials whose zero sets nest around the full one.
  double hinge_max(double x, double y, int k_max) const {
    LCSLAB_REQUIRE(k_max >= 1 && k_max <= b_.size(), "hinge_max: scale index out of range");
    double best = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const std::size_t kk = static_cast<std::size_t>(k);
      const double margin = std::abs(y - bk_[kk] * x) - (slope_[kk] * x + thick_[kk]);
      const double v = slope_[kk] * margin;
      if (margin > 0.0 && v > best) best = v;
    }
    return best;
  }

  double v_tilde(double x, double y) const {
    return prof_.slope_scale * hinge_max(x, y, b_.size());
  }

  // Largest k such that phi_j = 0 for every j <= k (equivalently the deepest
  // nested zero set still containing the point); 0 when even scale 1 is
  // active, N when the point is in the full zero set.
  int zero_depth(double x, double y) const {
    for (int k = 1; k <= b_.size(); ++k)
      if (phi(k, x, y) > 0.0) return k - 1;
    return b_.size();
  }

  // Disk average of v_tilde over radius delta (or the indicator convolution
  // when the profile asks for the unnormalized mollifier).
  double mollified(double x, double y) const {
    double acc = 0.0;
    for (const auto& node : moll_) acc += node.w * v_tilde(x + node.dx, y + node.dy);
    if (!prof_.normalized_mollifier) acc *= kPi * prof_.delta * prof_.delta;
    return acc;
  }

  double v_full(double x, double y) const {
    return mollified(x, y) + prof_.quad_scale * (x * x + y * y);
  }

 private:
  BitString b_;
  ExponentProfile prof_;
  std::vector<double> bk_, slope_, thick_;
  std::vector<detail::DiskNode> moll_;
};

// Closed angular sector {(x, beta x) : x >= x_min, beta_lo <= beta <= beta_hi}.
struct Sector {
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  double x_min = 0.0;

  bool contains(double x, double y) const {
    return x >= x_min && y >= beta_lo * x && y <= beta_hi * x;
  }
};

// The cone the zero set of v_tilde hugs: ratio within 2^-N of [b].
inline Sector zero_sector(const BitString& b) {
  const double w = std::ldexp(1.0, -b.size());
  return Sector{b.value() - w, b.value() + w, 0.0};
}

// The identification sectors. Half-width 0.4x the dyadic spacing 2^{-(N+2)}
// keeps the family pairwise disjoint (adjacent prefix values differ by
// exactly one spacing) while staying well inside zero_sector(b).
inline Sector omega_sector(const BitString& b) {
  const double w = 0.4 * std::ldexp(1.0, -(b.size() + 2));
  return Sector{b.value() - w, b.value() + w, std::ldexp(1.0, -3 * b.size())};
}

// Euclidean distance to the untruncated cone {x >= 0, beta_lo x <= y <= beta_hi x}
// by exact projection: the nearest point is interior, on one of the boundary
// rays, or the apex. Callers needing P-style distances pass zero_sector.
inline double sector_distance(const Sector& s, double x, double y) {
  if (x >= 0.0 && y >= s.beta_lo * x && y <= s.beta_hi * x) return 0.0;
  double best = std::hypot(x, y);
  for (double beta : {s.beta_lo, s.beta_hi}) {
    const double t = (x + beta * y) / (1.0 + beta * beta);
    if (t > 0.0) best = std::min(best, std::hypot(x - t, y - t * beta));
  }
  return best;
}

// Uniform point of the sector with x <= x_max (ratio and abscissa uniform).
inline std::pair<double, double> sample_sector_point(const Sector& s, double x_max,
                                                     rng::Stream& stream) {
  LCSLAB_REQUIRE(x_max > s.x_min, "sector sample: empty abscissa range");
  const double x = stream.uniform(s.x_min, x_max);
  const double beta = stream.uniform(s.beta_lo, s.beta_hi);
  return {x, beta * x};
}

// Sector point displaced uniformly in the disk of the given radius.
inline std::pair<double, double> sample_near_sector(const Sector& s, double x_max, double dist,
                                                    rng::Stream& stream) {
  auto [x, y] = sample_sector_point(s, x_max, stream);
  const double theta = stream.uniform(0.0, 2.0 * kPi);
  const double r = dist * std::sqrt(stream.uniform());
  return {x + r * std::cos(theta), y + r * std::sin(theta)};
}

// S_l(b)-style agreement region: x below small_x_factor * 2^{-3N}, or ratio
// deviation from [b]_l of at least margin * 2^{-l}. Potentials of strings
// sharing the first l bits coincide here because scales beyond l lose the max.
inline bool in_agreement_region(const BitString& b, int l, double x, double y,
                                double margin = kAgreementMargin,
                                double small_x_factor = kAgreementSmallX) {
  LCSLAB_REQUIRE(l >= 1 && l <= b.size(), "agreement region: prefix length out of range");
  if (x < small_x_factor * std::ldexp(1.0, -3 * b.size())) return true;
  return std::abs(y - b.prefix_value(l) * x) >= margin * std::ldexp(x, -l);
}

// Random point of the agreement region: the blind small-x strip with
// probability one half, otherwise a strict slab violation at a ratio between
// 1x and 4x the margin.
inline std::pair<double, double> sample_agreement_point(const BitString& b, int l,
                                                        rng::Stream& stream,
                                                        double margin = kAgreementMargin,
                                                        double small_x_factor = kAgreementSmallX) {
  LCSLAB_REQUIRE(l >= 1 && l <= b.size(), "agreement sample: prefix length out of range");
  const double x_blind = small_x_factor * std::ldexp(1.0, -3 * b.size());
  if (stream.uniform() < 0.5) {
    const double x = stream.uniform(-2.0, x_blind * (1.0 - 1e-12));
    return {x, stream.uniform(-2.0, 2.0)};
  }
  const double x = stream.uniform(x_blind, 2.0);
  const double side = stream.uniform() < 0.5 ? -1.0 : 1.0;
  const double ratio = 1.000001 + 3.0 * stream.uniform();
  return {x, b.prefix_value(l) * x + side * ratio * margin * std::ldexp(x, -l)};
}

// Induction step of the prefix-agreement argument: inside S_l(b), an active
// phi_k with k > l cannot exceed twice its predecessor. Point-level
// precondition failures (k <= l, point outside S_l, inactive phi_k) yield a
// distinguished "not applicable" rather than false.
inline std::optional<bool> induction_check(const KakeyaPotential& pot, int l, int k, double x,
                                           double y) {
  LCSLAB_REQUIRE(l >= 1 && l <= pot.n(), "induction check: prefix length out of range");
  LCSLAB_REQUIRE(k >= 1 && k <= pot.n(), "induction check: scale index out of range");
  if (k <= l) return std::nullopt;
  if (!in_agreement_region(pot.bits(), l, x, y)) return std::nullopt;
  const double pk = pot.phi(k, x, y);
  if (!(pk > 0.0)) return std::nullopt;
  return pk <= 2.0 * pot.phi(k - 1, x, y);
}

struct InductionSample {
  int l = 0, k = 0;
  double x = 0.0, y = 0.0;
};

// One proposal of an admissible induction configuration: uniform (l, k) with
// k > l, a point from the sampled agreement region, kept only when phi_k is
// active there. Returns nullopt when the proposal is inadmissible; callers
// loop until they have collected enough samples.
inline std::optional<InductionSample> propose_induction_sample(const KakeyaPotential& pot,
                                                               rng::Stream& stream) {
  LCSLAB_REQUIRE(pot.n() >= 2, "induction sampling needs N >= 2");
  const int l = 1 + static_cast<int>(stream.below(static_cast<std::uint64_t>(pot.n() - 1)));
  const int k =
      l + 1 + static_cast<int>(stream.below(static_cast<std::uint64_t>(pot.n() - l)));
  auto [x, y] = sample_agreement_point(pot.bits(), l, stream);
  if (!(pot.phi(k, x, y) > 0.0)) return std::nullopt;
  return InductionSample{l, k, x, y};
}

// One potential-value query made adversarially informative: reports the
// longest prefix whose ray keeps the query inside the widened slab. Queries
// with x below (1/8) 2^{-3N} cannot separate any pair of strings and carry no
// information.
struct LeakResponse {
  bool informative = false;
  int ell = 0;            // largest l in [1, 64] with |y - [b]_l x| <= margin 2^-l x; 0 when none
  int revealed_len = 0;   // min(ell + 1, N)
  std::uint64_t revealed_prefix = 0;  // numerator of [b]_{revealed_len}
  bool past_end = false;  // ell + 1 > N: asked for more bits than exist
};

inline LeakResponse bit_leak_oracle(const BitString& b, double x, double y,
                                    double margin = kWideAgreementMargin) {
  LeakResponse r;
  const double x_floor = kWideAgreementSmallX * std::ldexp(1.0, -3 * b.size());
  if (!(x >= x_floor)) return r;
  r.informative = true;
  for (int l = 1; l <= 64; ++l)
    if (std::abs(y - b.prefix_value(l) * x) <= margin * std::ldexp(x, -l)) r.ell = l;
  r.revealed_len = std::min(r.ell + 1, b.size());
  r.past_end = r.ell + 1 > b.size();
  r.revealed_prefix = b.prefix_numerator(r.revealed_len);
  return r;
}

enum class LeakStrategy { kRandomUniform, kBisection };

inline const char* to_string(LeakStrategy s) {
  return s == LeakStrategy::kRandomUniform ? "random" : "bisection";
}

struct LeakageReport {
  int n_bits = 0;
  LeakStrategy strategy = LeakStrategy::kRandomUniform;
  int trials = 0;
  int queries_per_trial = 0;  // cap; bisection stops early once b is known
  std::int64_t total_queries = 0;
  std::int64_t uninformative_queries = 0;
  std::int64_t past_end_events = 0;
  double avg_new_bits_per_query = 0.0;  // plug-in proxy for per-query entropy
  std::vector<std::int64_t> new_bits_histogram;      // newly revealed bits, index 0..N
  std::vector<std::int64_t> revealed_len_histogram;  // raw prefix lengths, index 0..N
  std::vector<int> queries_to_identify;              // per trial; -1 when never identified

  double identified_within(int budget) const {
    if (queries_to_identify.empty()) return 0.0;
    std::int64_t hits = 0;
    for (int q : queries_to_identify)
      if (q >= 0 && q <= budget) ++hits;
    return static_cast<double>(hits) / static_cast<double>(queries_to_identify.size());
  }
};

// Monte-Carlo information-leakage experiment: b uniform per trial, the chosen
// strategy issues queries against bit_leak_oracle, and the report tallies how
// much of b each query newly reveals. The random strategy draws x uniform on
// [x_floor, 1] and y uniform on [0, 1/2); bisection queries (1, [b]_known)
// and stops once the whole string is known. Trials run on child streams and
// merge in trial order, so the report is independent of the thread count.
inline LeakageReport leakage_experiment(int n_bits, int n_queries, LeakStrategy strategy,
                                        int trials, rng::Stream& stream) {
  LCSLAB_REQUIRE(n_bits >= 1 && n_bits <= 60, "leakage experiment: bit count out of range");
  LCSLAB_REQUIRE(n_queries >= 0, "leakage experiment: negative query budget");
  LCSLAB_REQUIRE(trials >= 1, "leakage experiment: need at least one trial");

  struct TrialOut {
    std::vector<std::int16_t> revealed_len;  // per query
    std::vector<std::int16_t> new_bits;      // per query
    int uninformative = 0;
    int past_end = 0;
    int identify_query = -1;
  };
  std::vector<TrialOut> out(static_cast<std::size_t>(trials));

  const double x_floor = kWideAgreementSmallX * std::ldexp(1.0, -3 * n_bits);
  parallel_for(trials, [&](std::int64_t t) {
    rng::Stream ts = stream.child(static_cast<std::uint64_t>(t));
    const BitString b = BitString::random(n_bits, ts);
    TrialOut& o = out[static_cast<std::size_t>(t)];
    o.revealed_len.reserve(static_cast<std::size_t>(n_queries));
    o.new_bits.reserve(static_cast<std::size_t>(n_queries));
    int known = 0;
    for (int q = 0; q < n_queries; ++q) {
      double x, y;
      if (strategy == LeakStrategy::kRandomUniform) {
        x = ts.uniform(x_floor, 1.0);
        y = ts.uniform(0.0, 0.5);
      } else {
        x = 1.0;
        y = b.prefix_value(known);  // [b]_0 = 0 before anything is known
      }
      const LeakResponse resp = bit_leak_oracle(b, x, y);
      int revealed = 0;
      if (resp.informative) {
        revealed = resp.revealed_len;
        o.past_end += resp.past_end ? 1 : 0;
      } else {
        ++o.uninformative;
      }
      const int fresh = std::max(0, revealed - known);
      known = std::max(known, revealed);
      o.revealed_len.push_back(static_cast<std::int16_t>(revealed));
      o.new_bits.push_back(static_cast<std::int16_t>(fresh));
      if (known == n_bits && o.identify_query < 0) o.identify_query = q + 1;
      if (strategy == LeakStrategy::kBisection && known == n_bits) break;
    }
  });

  LeakageReport rep;
  rep.n_bits = n_bits;
  rep.strategy = strategy;
  rep.trials = trials;
  rep.queries_per_trial = n_queries;
  rep.new_bits_histogram.assign(static_cast<std::size_t>(n_bits) + 1, 0);
  rep.revealed_len_histogram.assign(static_cast<std::size_t>(n_bits) + 1, 0);
  rep.queries_to_identify.reserve(static_cast<std::size_t>(trials));
  std::int64_t fresh_total = 0;
  for (const TrialOut& o : out) {
    rep.total_queries += static_cast<std::int64_t>(o.new_bits.size());
    rep.uninformative_queries += o.uninformative;
    rep.past_end_events += o.past_end;
    for (std::int16_t v : o.revealed_len) ++rep.revealed_len_histogram[static_cast<std::size_t>(v)];
    for (std::int16_t v : o.new_bits) {
      ++rep.new_bits_histogram[static_cast<std::size_t>(v)];
      fresh_total += v;
    }
    rep.queries_to_identify.push_back(o.identify_query);
  }
  rep.avg_new_bits_per_query =
      rep.total_queries > 0
          ? static_cast<double>(fresh_total) / static_cast<double>(rep.total_queries)
          : 0.0;
  return rep;
}

// Identification mass of the sector family member b: P_{V_b}(Omega_b) with
// both integrals truncated where the quadratic confinement alone reaches 40.
// Boxes split adaptively until the local two-level error estimate fits an
// error budget of 1e-3 relative; blowing the budget at the depth cap is a
// hard numerical error. Needs a reduced exponent profile: under paper
// exponents the truncation radius and the integrand's dynamic range are far
// outside what any fixed-precision quadrature can resolve.
struct MassReport {
  double mass = 0.0;
  double sector_integral = 0.0;
  double plane_integral = 0.0;
  double truncation_radius = 0.0;
  double normalization_defect = 0.0;  // relative mass gained by widening the box 1.25x
  int refinement_level = 0;           // deepest adaptive split either integral used
  double rel_change = 0.0;            // worst accumulated error estimate, relative
};

namespace detail {

inline constexpr int kAdaptMaxDepth = 24;

struct AdaptiveOutcome {
  double value = 0.0;
  double err_est = 0.0;
  int max_depth = 0;
  bool converged = true;
};

// Accept a box once the 1x1 vs 2x2 tensor-rule disagreement fits the budget,
// else split into quadrants each carrying half the budget. Halving (not
// quartering) lets the kink cells converge: their error shrinks with the
// area, which a quartered budget would exactly cancel.
template <class F>
void adapt_box(const F& f, double ax, double bx, double ay, double by, double tol, int depth,
               AdaptiveOutcome& out) {
  const double coarse = quad::integrate_2d_panel_row(f, ax, bx, ay, by, 1, 0);
  const double fine = quad::integrate_2d_panel_row(f, ax, bx, ay, by, 2, 0) +
                      quad::integrate_2d_panel_row(f, ax, bx, ay, by, 2, 1);
  const double err = std::abs(fine - coarse);
  if (depth > out.max_depth) out.max_depth = depth;
  if (err <= tol || depth >= kAdaptMaxDepth) {
    out.value += fine;
    out.err_est += err;
    if (err > tol) out.converged = false;
    return;
  }
  const double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
  adapt_box(f, ax, mx, ay, my, 0.5 * tol, depth + 1, out);
  adapt_box(f, mx, bx, ay, my, 0.5 * tol, depth + 1, out);
  adapt_box(f, ax, mx, my, by, 0.5 * tol, depth + 1, out);
  adapt_box(f, mx, bx, my, by, 0.5 * tol, depth + 1, out);
}

// Equal-area top-level cells refined independently (so trials can run on
// threads) and merged in cell order: bitwise independent of the thread count.
template <class F>
AdaptiveOutcome adaptive_2d(const F& f, double ax, double bx, double ay, double by, double tol_abs,
                            int top_cells) {
  LCSLAB_REQUIRE(ax < bx && ay < by, "adaptive_2d: empty rectangle");
  LCSLAB_REQUIRE(top_cells >= 1 && tol_abs > 0.0, "adaptive_2d: bad refinement parameters");
  const int n_cells = top_cells * top_cells;
  std::vector<AdaptiveOutcome> cells(static_cast<std::size_t>(n_cells));
  const double wx = (bx - ax) / top_cells, wy = (by - ay) / top_cells;
  parallel_for(n_cells, [&](std::int64_t c) {
    const int i = static_cast<int>(c) % top_cells, j = static_cast<int>(c) / top_cells;
    adapt_box(f, ax + i * wx, ax + (i + 1) * wx, ay + j * wy, ay + (j + 1) * wy,
              tol_abs / n_cells, 0, cells[static_cast<std::size_t>(c)]);
  });
  AdaptiveOutcome total;
  for (const AdaptiveOutcome& cell : cells) {
    total.value += cell.value;
    total.err_est += cell.err_est;
    total.max_depth = std::max(total.max_depth, cell.max_depth);
    total.converged = total.converged && cell.converged;
  }
  return total;
}

}  // namespace detail

inline MassReport omega_mass(const BitString& b, const ExponentProfile& prof) {
  LCSLAB_REQUIRE(!prof.paper_exponents, "omega_mass: reduced exponent profile required");
  LCSLAB_REQUIRE(prof.quad_scale > 0.0, "omega_mass: quadratic confinement required");
  const KakeyaPotential pot(b, prof);
  const Sector omega = omega_sector(b);

  MassReport rep;
  rep.truncation_radius = std::sqrt(40.0 / prof.quad_scale);
  const double r = rep.truncation_radius;
  constexpr double kRelTol = 1e-3;

  const auto density = [&pot](double x, double y) { return std::exp(-pot.v_full(x, y)); };
  // Omega_b in (x, ratio) coordinates; the area element is x dx dbeta.
  const auto sector_density = [&pot](double x, double beta) {
    return std::exp(-pot.v_full(x, beta * x)) * x;
  };

  // Pilot values turn the relative tolerance into absolute budgets. A few
  // percent of pilot error only shifts the budgets off-nominal, so a single
  // adaptive pass suffices.
  const double plane_pilot = quad::integrate_2d_panels(density, -r, r, -r, r, 16);
  const double sector_pilot = quad::integrate_2d_panels(sector_density, omega.x_min, r,
                                                        omega.beta_lo, omega.beta_hi, 16);
  LCSLAB_CHECK_NUMERIC(plane_pilot > 0.0 && sector_pilot > 0.0,
                       "omega_mass: degenerate pilot integral");

  const detail::AdaptiveOutcome plane =
      detail::adaptive_2d(density, -r, r, -r, r, kRelTol * plane_pilot, 16);
  const detail::AdaptiveOutcome sector = detail::adaptive_2d(
      sector_density, omega.x_min, r, omega.beta_lo, omega.beta_hi, kRelTol * sector_pilot, 8);
  LCSLAB_CHECK_NUMERIC(plane.converged && sector.converged,
                       "omega_mass: quadrature did not converge at max refinement");
  LCSLAB_CHECK_NUMERIC(plane.value > 0.0 && sector.value >= 0.0,
                       "omega_mass: degenerate normalizer");

  rep.plane_integral = plane.value;
  rep.sector_integral = sector.value;
  rep.refinement_level = std::max(plane.max_depth, sector.max_depth);
  rep.rel_change = std::max(plane.err_est / plane.value,
                            sector.err_est / std::max(sector.value, 1e-300));
  LCSLAB_CHECK_NUMERIC(rep.rel_change <= kRelTol,
                       "omega_mass: accumulated quadrature error above tolerance");

  // Tail cross-check: the mass the normalizer gains when the truncation box
  // widens by 1.25x. The density is at most exp(-40) out there, so the four
  // flank rectangles converge immediately and the defect sits at noise level.
  double ring = 0.0;
  const double w = 1.25 * r;
  const double flanks[4][4] = {
      {-w, -r, -w, w}, {r, w, -w, w}, {-r, r, -w, -r}, {-r, r, r, w}};
  for (const auto& box : flanks)
    ring +=
        detail::adaptive_2d(density, box[0], box[1], box[2], box[3], kRelTol * plane_pilot, 4)
            .value;
  rep.normalization_defect = ring / (rep.plane_integral + ring);

  rep.mass = rep.sector_integral / rep.plane_integral;
  return rep;
}

// Layered SVG of the nested zero sets, one group per string: depth-shaded
// cells (darker = deeper scale k), the bounding cone of the zero set, and
// optional reference circles. Pure string output; callers own file I/O.
struct RenderOptions {
  int cells = 401;
  double view_radius = 1.0;
  std::vector<double> circle_radii{};
};

namespace detail {

inline void append_num(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  s += buf;
}

inline const char* render_color(std::size_t i) {
  static constexpr std::array<const char*, 6> kPalette = {"#a63c2e", "#2e5fa6", "#3c8a46",
                                                          "#7a4fa0", "#a08030", "#3c8a8a"};
  return kPalette[i % kPalette.size()];
}

}  // namespace detail

inline std::string render_zero_sets(const std::vector<BitString>& strings,
                                    const RenderOptions& opt = {}) {
  LCSLAB_REQUIRE(!strings.empty(), "render: need at least one bit string");
  for (const BitString& b : strings)
    LCSLAB_REQUIRE(b.size() <= 6, "render: zero-set rasterization supports N <= 6");
  LCSLAB_REQUIRE(opt.cells >= 16 && opt.cells <= 2048, "render: cell count out of range");
  LCSLAB_REQUIRE(opt.view_radius > 0.0, "render: view radius must be positive");

  const double r = opt.view_radius;
  const double step = 2.0 * r / opt.cells;
  std::string svg;
  svg.reserve(1 << 16);
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"";
  detail::append_num(svg, -r);
  svg += " ";
  detail::append_num(svg, -r);
  svg += " ";
  detail::append_num(svg, 2 * r);
  svg += " ";
  detail::append_num(svg, 2 * r);
  svg += "\" width=\"760\" height=\"760\">\n";
  svg += "<rect x=\"";
  detail::append_num(svg, -r);
  svg += "\" y=\"";
  detail::append_num(svg, -r);
  svg += "\" width=\"";
  detail::append_num(svg, 2 * r);
  svg += "\" height=\"";
  detail::append_num(svg, 2 * r);
  svg += "\" fill=\"#ffffff\"/>\n";

  for (std::size_t s = 0; s < strings.size(); ++s) {
    const KakeyaPotential pot(strings[s]);
    const char* color = detail::render_color(s);
    svg += "<g fill=\"";
    svg += color;
    svg += "\"><title>";
    svg += strings[s].to_string();
    svg += "</title>\n";
    for (int row = 0; row < opt.cells; ++row) {
      const double yc = r - (row + 0.5) * step;  // svg rows scan downward
      int run_depth = 0;
      int run_start = 0;
      const auto flush = [&](int end_col) {
        if (run_depth <= 0) return;
        const double x0 = -r + run_start * step;
        const double width = (end_col - run_start) * step;
        svg += "<rect x=\"";
        detail::append_num(svg, x0);
        svg += "\" y=\"";
        detail::append_num(svg, -yc - 0.5 * step);
        svg += "\" width=\"";
        detail::append_num(svg, width);
        svg += "\" height=\"";
        detail::append_num(svg, step);
        svg += "\" fill-opacity=\"";
        detail::append_num(svg, 0.2 + 0.6 * run_depth / pot.n());
        svg += "\"/>\n";
      };
      for (int col = 0; col < opt.cells; ++col) {
        const double xc = -r + (col + 0.5) * step;
        const int depth = pot.zero_depth(xc, yc);
        if (depth != run_depth) {
          flush(col);
          run_depth = depth;
          run_start = col;
        }
      }
      flush(opt.cells);
    }
    const Sector cone = zero_sector(strings[s]);
    for (double beta : {cone.beta_lo, cone.beta_hi}) {
      const double scale = r / std::max(1.0, std::abs(beta));
      svg += "<line x1=\"0\" y1=\"0\" x2=\"";
      detail::append_num(svg, scale);
      svg += "\" y2=\"";
      detail::append_num(svg, -beta * scale);
      svg += "\" stroke=\"";
      svg += color;
      svg += "\" stroke-opacity=\"0.7\" stroke-width=\"";
      detail::append_num(svg, step * 0.6);
      svg += "\"/>\n";
    }
    svg += "</g>\n";
  }

  for (double radius : opt.circle_radii) {
    svg += "<circle cx=\"0\" cy=\"0\" r=\"";
    detail::append_num(svg, radius);
    svg += "\" fill=\"none\" stroke=\"#777777\" stroke-dasharray=\"0.01 0.01\" stroke-width=\"";
    detail::append_num(svg, 2.0 * r / 760.0);
    svg += "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace lcslab::kakeya
