#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lcslab/kakeya.hpp"
#include "lcslab/quadrature.hpp"
#include "lcslab/rng.hpp"

using namespace lcslab;
using kakeya::BitString;
using kakeya::ExponentProfile;
using kakeya::KakeyaPotential;

TEST_CASE("bit string prefix values are exact dyadics") {
  const BitString b = BitString::parse("1010");
  REQUIRE(b.size() == 4);
  REQUIRE(b.raw() == 0b1010u);
  REQUIRE(b.prefix_value(1) == 0.125);
  REQUIRE(b.prefix_value(2) == 0.125);
  REQUIRE(b.prefix_value(3) == 0.15625);
  REQUIRE(b.prefix_value(4) == 0.15625);
  REQUIRE(b.value() == 5.0 / 32.0);
  REQUIRE(b.prefix_value(7) == b.value());  // clamps past the end
  REQUIRE(b.prefix_numerator(1) == 1u);
  REQUIRE(b.prefix_numerator(4) == 10u);
  REQUIRE(b.prefix_value(0) == 0.0);

  const BitString zero = BitString::parse("0000");
  for (int l = 0; l <= 6; ++l) REQUIRE(zero.prefix_value(l) == 0.0);

  REQUIRE(b.bit(1) == 1);
  REQUIRE(b.bit(2) == 0);
  REQUIRE(b.bit(3) == 1);
  REQUIRE(b.bit(4) == 0);
  REQUIRE(b.to_string() == "1010");
  REQUIRE(b.prefix(2) == BitString::parse("10"));
  REQUIRE(b.complement() == BitString::parse("0101"));
  REQUIRE(b.common_prefix_length(BitString::parse("1011")) == 3);
  REQUIRE(b.common_prefix_length(b) == 4);
  REQUIRE(b.common_prefix_length(BitString::parse("0101")) == 0);

  REQUIRE_THROWS_AS(BitString::parse("102"), std::invalid_argument);
  REQUIRE_THROWS_AS(BitString(0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(BitString(2, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(b.bit(0), std::invalid_argument);
}

TEST_CASE("random bit strings are length-bounded and seed-deterministic") {
  rng::Stream s1(99), s2(99);
  for (int i = 0; i < 50; ++i) {
    const BitString a = BitString::random(12, s1);
    const BitString b = BitString::random(12, s2);
    REQUIRE(a == b);
    REQUIRE(a.raw() < (1u << 12));
  }
}

TEST_CASE("hinge value at the worked example is bitwise exact") {
  // N = 2, b = 10: |1 - 0.125| = 0.875 against slab half-width 0.53125.
  const KakeyaPotential pot(BitString::parse("10"));
  REQUIRE(pot.phi(1, 1.0, 1.0) == 0.34375);
  REQUIRE(pot.phi(2, 1.0, 1.0) == 0.5625);
  REQUIRE(pot.phi(1, 0.0, 0.0) == 0.0);
  REQUIRE(pot.phi(2, 0.0, 0.0) == 0.0);
  // Scale 1 wins the weighted max: 2^-1 * 0.34375 over 2^-2 * 0.5625.
  REQUIRE(pot.v_tilde(1.0, 1.0) == 16384.0 * 0.171875);

  const KakeyaPotential unit(BitString::parse("10"), ExponentProfile::reduced(0, 4, 10));
  REQUIRE(unit.v_tilde(1.0, 1.0) == 0.171875);

  REQUIRE_THROWS_AS(pot.phi(0, 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(pot.phi(3, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("points on the target ray sit at full zero depth") {
  for (const char* text : {"1010", "0001", "1111", "011"}) {
    const BitString b = BitString::parse(text);
    const KakeyaPotential pot(b);
    for (double x : {0.25, 1.0, 3.0}) {
      for (int k = 1; k <= b.size(); ++k) REQUIRE(pot.phi(k, x, b.value() * x) == 0.0);
      REQUIRE(pot.v_tilde(x, b.value() * x) == 0.0);
      REQUIRE(pot.zero_depth(x, b.value() * x) == b.size());
    }
  }
  REQUIRE(KakeyaPotential(BitString::parse("10")).v_tilde(0.0, 0.0) == 0.0);
}

TEST_CASE("composite panel quadrature integrates smooth references") {
  // x^3 y^2 over [-1,2] x [0,1] = 15/4 * 1/3.
  const auto poly = [](double x, double y) { return x * x * x * y * y; };
  REQUIRE(quad::integrate_2d_panels(poly, -1.0, 2.0, 0.0, 1.0, 3) ==
          Catch::Approx(1.25).epsilon(1e-13));
  const auto sep = [](double x, double y) { return std::exp(x) * std::cos(y); };
  const double exact = (std::exp(1.0) - 1.0) * std::sin(1.0);
  REQUIRE(quad::integrate_2d_panels(sep, 0.0, 1.0, 0.0, 1.0, 2) ==
          Catch::Approx(exact).epsilon(1e-14));
  REQUIRE_THROWS_AS(quad::integrate_2d_panels(sep, 1.0, 0.0, 0.0, 1.0, 2), std::invalid_argument);
}

TEST_CASE("disk rule reproduces locally affine potentials at the center") {
  // Around (1, 1) the weighted max is held by scale 1 with a stable sign, so
  // the potential is affine across the whole mollification disk and the
  // average must equal the center value (the rule is affine-exact).
  const KakeyaPotential pot(BitString::parse("10"));
  const double center = pot.v_tilde(1.0, 1.0);
  REQUIRE(pot.mollified(1.0, 1.0) == Catch::Approx(center).epsilon(1e-12));
}

TEST_CASE("unnormalized mollifier differs by exactly the disk area") {
  ExponentProfile norm = ExponentProfile::paper(2);
  ExponentProfile lit = norm;
  lit.normalized_mollifier = false;
  const BitString b = BitString::parse("10");
  const KakeyaPotential pn(b, norm), pl(b, lit);
  for (double x : {0.3, 1.0, 1.7}) {
    const double scale = kPi * norm.delta * norm.delta;
    REQUIRE(pl.mollified(x, 0.9) == Catch::Approx(pn.mollified(x, 0.9) * scale).epsilon(1e-14));
  }
}

TEST_CASE("full potential reduces to pure confinement inside the sector") {
  // The mollification disk around (1, [b]) stays inside the zero set, so the
  // averaged part vanishes identically and only the quadratic term is left.
  const BitString b = BitString::parse("10");
  const KakeyaPotential pot(b);
  const double y = b.value();
  REQUIRE(pot.mollified(1.0, y) == 0.0);
  REQUIRE(pot.v_full(1.0, y) == pot.profile().quad_scale * (1.0 + y * y));
  REQUIRE(pot.v_full(0.0, 0.0) == 0.0);
}

TEST_CASE("sector distance matches hand values and a ray-grid oracle") {
  const kakeya::Sector s = kakeya::zero_sector(BitString::parse("10"));
  REQUIRE(s.beta_lo == -0.125);
  REQUIRE(s.beta_hi == 0.375);
  REQUIRE(kakeya::sector_distance(s, 1.0, 0.0) == 0.0);
  REQUIRE(kakeya::sector_distance(s, -1.0, 0.0) == 1.0);  // apex is nearest
  REQUIRE(kakeya::sector_distance(s, 0.0, 1.0) ==
          Catch::Approx(1.0 / std::sqrt(1.0 + 0.375 * 0.375)).epsilon(1e-12));

  const auto ray_dist = [](double beta, double px, double py) {
    const double t = std::max(0.0, (px + beta * py) / (1.0 + beta * beta));
    return std::hypot(px - t, py - t * beta);
  };
  rng::Stream stream(7);
  for (int i = 0; i < 300; ++i) {
    const double px = stream.uniform(-1.0, 2.0), py = stream.uniform(-1.0, 1.0);
    double oracle = std::hypot(px, py);
    for (int g = 0; g <= 4000; ++g) {
      const double beta = s.beta_lo + (s.beta_hi - s.beta_lo) * g / 4000.0;
      oracle = std::min(oracle, ray_dist(beta, px, py));
    }
    const double mine = kakeya::sector_distance(s, px, py);
    REQUIRE(mine <= oracle + 1e-12);
    REQUIRE(mine >= oracle - 2e-4);
  }
}

TEST_CASE("midpoint convexity holds for raw and mollified potentials") {
  const auto check = [](const KakeyaPotential& pot, std::uint64_t seed) {
    rng::Stream stream(seed);
    for (int i = 0; i < 300; ++i) {
      const double px = stream.uniform(-1.5, 1.5), py = stream.uniform(-1.5, 1.5);
      const double qx = stream.uniform(-1.5, 1.5), qy = stream.uniform(-1.5, 1.5);
      const double mx = 0.5 * (px + qx), my = 0.5 * (py + qy);
      REQUIRE(pot.v_tilde(mx, my) <=
              0.5 * (pot.v_tilde(px, py) + pot.v_tilde(qx, qy)) + 1e-9);
      REQUIRE(pot.v_full(mx, my) <= 0.5 * (pot.v_full(px, py) + pot.v_full(qx, qy)) + 1e-9);
    }
  };
  check(KakeyaPotential(BitString::parse("10")), 11);
  check(KakeyaPotential(BitString::parse("10110"), ExponentProfile::reduced(7, 32, 25)), 12);
}

TEST_CASE("mollified part obeys the prefix-weighted slope bound") {
  for (const char* text : {"10", "00", "1011"}) {
    const BitString b = BitString::parse(text);
    for (bool normalized : {true, false}) {
      ExponentProfile prof =
          b.size() == 2 ? ExponentProfile::paper(2) : ExponentProfile::reduced(6, 20, 14);
      prof.normalized_mollifier = normalized;
      const KakeyaPotential pot(b, prof);
      double lip = 0.0;
      for (int k = 1; k <= b.size(); ++k)
        lip += std::ldexp(1.0 + b.prefix_value(k), -k);
      lip *= prof.slope_scale;
      if (!normalized) lip *= kPi * prof.delta * prof.delta;
      rng::Stream stream(13);
      for (int i = 0; i < 250; ++i) {
        const double px = stream.uniform(-1.0, 1.0), py = stream.uniform(-1.0, 1.0);
        const double qx = stream.uniform(-1.0, 1.0), qy = stream.uniform(-1.0, 1.0);
        const double gap = std::abs(pot.mollified(px, py) - pot.mollified(qx, qy));
        REQUIRE(gap <= lip * std::hypot(px - qx, py - qy) * (1.0 + 1e-12) + 1e-12);
      }
    }
  }
}

TEST_CASE("thousand-delta sector neighborhoods stay in the zero set at N = 5") {
  rng::Stream stream(21);
  for (const char* text : {"10110", "00000", "11111"}) {
    const BitString b = BitString::parse(text);
    const KakeyaPotential pot(b);  // paper profile, delta = 2^-25
    const kakeya::Sector cone = kakeya::zero_sector(b);
    const double reach = kakeya::kZeroNeighborhoodFactor * pot.profile().delta;
    for (int i = 0; i < 1000; ++i) {
      auto [x, y] = kakeya::sample_near_sector(cone, 2.0, reach, stream);
      REQUIRE(pot.v_tilde(x, y) == 0.0);
    }
  }
}

TEST_CASE("the N = 4 neighborhood margin fails just above the apex") {
  // (0, 999 * 2^-20) is within 1000 delta of the sector apex, yet the scale-1
  // slab is only 2^-11 thick there; the thousand-delta guarantee needs N >= 5.
  const BitString b = BitString::parse("1010");
  const KakeyaPotential pot(b);
  const double y = std::ldexp(999.0, -20);
  REQUIRE(kakeya::sector_distance(kakeya::zero_sector(b), 0.0, y) <= std::ldexp(1000.0, -20));
  REQUIRE(pot.phi(1, 0.0, y) == std::ldexp(487.0, -20));
  REQUIRE(pot.v_tilde(0.0, y) > 0.0);
}

TEST_CASE("potential dominates the distance cone away from the sector") {
  const BitString b = BitString::parse("1010");
  const KakeyaPotential pot(b);  // kappa = 16
  const kakeya::Sector cone = kakeya::zero_sector(b);
  const double kappa4 = 65536.0;
  rng::Stream stream(31);
  for (int i = 0; i < 1000; ++i) {
    const double x = stream.uniform(-8.0, 8.0), y = stream.uniform(-8.0, 8.0);
    const double slack = kakeya::sector_distance(cone, x, y) - 1.0;
    if (slack <= 0.0) continue;
    REQUIRE(pot.v_tilde(x, y) >= kappa4 * slack * (1.0 - 1e-12));
  }
}

TEST_CASE("prefix-sharing potentials coincide bitwise on the agreement region") {
  rng::Stream stream(41);
  for (int n = 2; n <= 4; ++n) {
    std::vector<BitString> all;
    for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) all.emplace_back(n, w);
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        const int shared = all[i].common_prefix_length(all[j]);
        if (shared < 1) continue;
        const KakeyaPotential pa(all[i]), pb(all[j]);
        for (int l = 1; l <= shared; ++l) {
          for (int rep = 0; rep < 60; ++rep) {
            auto [x, y] = kakeya::sample_agreement_point(all[i], l, stream);
            REQUIRE(kakeya::in_agreement_region(all[i], l, x, y));
            REQUIRE(kakeya::in_agreement_region(all[j], l, x, y));
            REQUIRE(pa.v_tilde(x, y) == pb.v_tilde(x, y));
          }
        }
      }
    }
  }
}

TEST_CASE("mollification keeps the agreement leak below tolerance") {
  rng::Stream stream(43);
  for (bool normalized : {true, false}) {
    ExponentProfile prof = ExponentProfile::paper(4);
    prof.normalized_mollifier = normalized;
    std::vector<BitString> all;
    for (std::uint64_t w = 0; w < 16; ++w) all.emplace_back(4, w);
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        const int shared = all[i].common_prefix_length(all[j]);
        if (shared < 1) continue;
        const KakeyaPotential pa(all[i], prof), pb(all[j], prof);
        for (int l = 1; l <= shared; ++l) {
          for (int rep = 0; rep < 20; ++rep) {
            auto [x, y] = kakeya::sample_agreement_point(
                all[i], l, stream, kakeya::kWideAgreementMargin, kakeya::kWideAgreementSmallX);
            REQUIRE(std::abs(pa.v_full(x, y) - pb.v_full(x, y)) <= 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("scale recursion never violates the doubling bound") {
  rng::Stream stream(47);
  for (int n = 2; n <= 6; ++n) {
    const KakeyaPotential pot(BitString::random(n, stream));
    const double small_x = kakeya::kAgreementSmallX * std::ldexp(1.0, -3 * n);
    int collected = 0;
    while (collected < 2000) {
      const auto sample = kakeya::propose_induction_sample(pot, stream);
      if (!sample) continue;
      ++collected;
      const auto verdict = kakeya::induction_check(pot, sample->l, sample->k, sample->x, sample->y);
      REQUIRE(verdict.has_value());
      REQUIRE(*verdict);
      if (sample->x <= small_x)
        REQUIRE(pot.phi(sample->k - 1, sample->x, sample->y) >=
                pot.phi(sample->k, sample->x, sample->y));
    }
  }
}

TEST_CASE("inapplicable induction configurations are flagged, not failed") {
  const BitString b = BitString::parse("1010");
  const KakeyaPotential pot(b);
  // Scale not beyond the prefix.
  REQUIRE(!kakeya::induction_check(pot, 3, 2, 1.0, 5.0).has_value());
  // On the target ray every hinge is inactive.
  REQUIRE(!kakeya::induction_check(pot, 1, 3, 1.0, b.value()).has_value());
  // Inside the slab of the prefix scale: not in the agreement region.
  REQUIRE(!kakeya::induction_check(pot, 1, 3, 1.0, b.prefix_value(1) + 0.01).has_value());
  REQUIRE_THROWS_AS(kakeya::induction_check(pot, 0, 2, 1.0, 5.0), std::invalid_argument);
  REQUIRE_THROWS_AS(kakeya::induction_check(pot, 1, 5, 1.0, 5.0), std::invalid_argument);
}

TEST_CASE("leak oracle frozen examples") {
  const BitString b = BitString::parse("1010");
  // (1, 3): deviation 2.84375 from the full ray fits 200/64 but not 200/128.
  const kakeya::LeakResponse far = kakeya::bit_leak_oracle(b, 1.0, 3.0);
  REQUIRE(far.informative);
  REQUIRE(far.ell == 6);
  REQUIRE(far.revealed_len == 4);
  REQUIRE(far.past_end);
  REQUIRE(far.revealed_prefix == 10u);

  const kakeya::LeakResponse on_ray = kakeya::bit_leak_oracle(b, 1.0, b.value());
  REQUIRE(on_ray.informative);
  REQUIRE(on_ray.ell == 64);
  REQUIRE(on_ray.revealed_len == 4);
  REQUIRE(on_ray.past_end);

  const kakeya::LeakResponse wild = kakeya::bit_leak_oracle(b, 1.0, 1.0e6);
  REQUIRE(wild.informative);
  REQUIRE(wild.ell == 0);
  REQUIRE(wild.revealed_len == 1);
  REQUIRE(!wild.past_end);
  REQUIRE(wild.revealed_prefix == 1u);

  const double floor = kakeya::kWideAgreementSmallX * std::ldexp(1.0, -12);
  const kakeya::LeakResponse blind = kakeya::bit_leak_oracle(b, 0.9 * floor, 0.1);
  REQUIRE(!blind.informative);
  REQUIRE(blind.revealed_len == 0);
  REQUIRE(kakeya::bit_leak_oracle(b, floor, 0.0).informative);
}

TEST_CASE("zero-budget leakage experiments report zeros") {
  rng::Stream stream(53);
  const auto rep = kakeya::leakage_experiment(8, 0, kakeya::LeakStrategy::kRandomUniform, 5, stream);
  REQUIRE(rep.total_queries == 0);
  REQUIRE(rep.avg_new_bits_per_query == 0.0);
  for (int q : rep.queries_to_identify) REQUIRE(q == -1);
}

TEST_CASE("random queries leak a bounded number of fresh bits") {
  rng::Stream stream(59);
  const auto rep =
      kakeya::leakage_experiment(8, 16, kakeya::LeakStrategy::kRandomUniform, 200, stream);
  REQUIRE(rep.total_queries == 200 * 16);
  REQUIRE(rep.uninformative_queries == 0);
  REQUIRE(rep.revealed_len_histogram[0] == 0);  // every draw keeps x above the floor
  REQUIRE(rep.avg_new_bits_per_query > 0.0);
  REQUIRE(rep.avg_new_bits_per_query <= 6.0);
  std::int64_t hist_total = 0;
  for (std::int64_t c : rep.new_bits_histogram) hist_total += c;
  REQUIRE(hist_total == rep.total_queries);
}

TEST_CASE("bisection pins the whole string in two queries at N = 16") {
  rng::Stream stream(61);
  const auto rep =
      kakeya::leakage_experiment(16, 18, kakeya::LeakStrategy::kBisection, 200, stream);
  REQUIRE(rep.identified_within(18) == 1.0);
  REQUIRE(rep.new_bits_histogram[0] == 0);  // every issued query makes progress
  for (int q : rep.queries_to_identify) {
    REQUIRE(q >= 1);
    REQUIRE(q <= 2);
  }
}

TEST_CASE("leakage experiments are reproducible from the seed") {
  rng::Stream s1(67), s2(67);
  const auto a = kakeya::leakage_experiment(12, 10, kakeya::LeakStrategy::kRandomUniform, 50, s1);
  const auto b = kakeya::leakage_experiment(12, 10, kakeya::LeakStrategy::kRandomUniform, 50, s2);
  REQUIRE(a.total_queries == b.total_queries);
  REQUIRE(a.avg_new_bits_per_query == b.avg_new_bits_per_query);
  REQUIRE(a.new_bits_histogram == b.new_bits_histogram);
  REQUIRE(a.revealed_len_histogram == b.revealed_len_histogram);
  REQUIRE(a.queries_to_identify == b.queries_to_identify);
}

TEST_CASE("identification sectors are pairwise disjoint and nested in the cone") {
  std::vector<kakeya::Sector> sectors;
  for (std::uint64_t w = 0; w < 16; ++w) {
    const BitString b(4, w);
    const kakeya::Sector omega = kakeya::omega_sector(b);
    const kakeya::Sector cone = kakeya::zero_sector(b);
    REQUIRE(omega.beta_lo > cone.beta_lo);
    REQUIRE(omega.beta_hi < cone.beta_hi);
    REQUIRE(omega.x_min == std::ldexp(1.0, -12));
    sectors.push_back(omega);
  }
  std::sort(sectors.begin(), sectors.end(),
            [](const kakeya::Sector& a, const kakeya::Sector& b) { return a.beta_lo < b.beta_lo; });
  for (std::size_t i = 0; i + 1 < sectors.size(); ++i)
    REQUIRE(sectors[i].beta_hi < sectors[i + 1].beta_lo);
}

TEST_CASE("identification mass is substantial for every N = 2 member") {
  const ExponentProfile prof = ExponentProfile::reduced(3, 4, 10);
  for (const char* text : {"00", "01", "10", "11"}) {
    const auto rep = kakeya::omega_mass(BitString::parse(text), prof);
    REQUIRE(rep.mass >= 0.05);
    REQUIRE(rep.mass < 0.5);
    REQUIRE(rep.normalization_defect <= 1e-3);
    REQUIRE(rep.rel_change <= 1e-3);
    REQUIRE(rep.sector_integral > 0.0);
    REQUIRE(rep.plane_integral > rep.sector_integral);
    REQUIRE(rep.truncation_radius == Catch::Approx(std::sqrt(1280.0)));
  }
  REQUIRE_THROWS_AS(kakeya::omega_mass(BitString::parse("10"), ExponentProfile::paper(2)),
                    std::invalid_argument);
}

TEST_CASE("identification mass is bitwise reproducible") {
  const ExponentProfile prof = ExponentProfile::reduced(3, 2, 8);
  const auto a = kakeya::omega_mass(BitString::parse("10"), prof);
  const auto b = kakeya::omega_mass(BitString::parse("10"), prof);
  REQUIRE(a.mass == b.mass);
  REQUIRE(a.sector_integral == b.sector_integral);
  REQUIRE(a.plane_integral == b.plane_integral);
  REQUIRE(a.normalization_defect == b.normalization_defect);
}

TEST_CASE("zero sets are star-shaped along rays from the apex") {
  const BitString b = BitString::parse("1010");
  const KakeyaPotential pot(b);
  for (int a = 0; a < 64; ++a) {
    const double theta = -0.3 + 0.8 * a / 63.0;
    const double cx = std::cos(theta), sy = std::sin(theta);
    bool left_set = false;
    for (int step = 1; step <= 300; ++step) {
      const double t = 1.5 * step / 300.0;
      const bool inside = pot.zero_depth(t * cx, t * sy) == b.size();
      if (!inside) left_set = true;
      if (left_set) REQUIRE(!inside);
    }
  }
}

TEST_CASE("complement pair zero sets overlap only near the apex") {
  // Deepest slabs force |y - 15x/64| and |y| below x/16 + 2^-8 at once, which
  // is possible only for x <= 1/14; thickness keeps a blob alive below that.
  const KakeyaPotential ones(BitString::parse("1111"));
  const KakeyaPotential zeros(BitString::parse("0000"));
  bool found_common = false;
  double max_norm = 0.0;
  for (int ix = 0; ix <= 600; ++ix) {
    for (int iy = 0; iy <= 250; ++iy) {
      const double x = 0.12 * ix / 600.0;
      const double y = -0.02 + 0.05 * iy / 250.0;
      if (ones.zero_depth(x, y) == 4 && zeros.zero_depth(x, y) == 4) {
        found_common = true;
        max_norm = std::max(max_norm, std::hypot(x, y));
      }
    }
  }
  REQUIRE(found_common);
  REQUIRE(max_norm <= std::hypot(1.0 / 14.0, 1.0 / 14.0 / 16.0 + std::ldexp(1.0, -8)) + 1e-12);
  REQUIRE(ones.zero_depth(0.06, 0.007) == 4);
  REQUIRE(zeros.zero_depth(0.06, 0.007) == 4);
  // Well past the overlap radius the sets have separated for good.
  REQUIRE(ones.zero_depth(0.2, 0.2 * 15.0 / 64.0) == 4);
  REQUIRE(zeros.zero_depth(0.2, 0.2 * 15.0 / 64.0) < 4);
}

TEST_CASE("zero set rendering emits layered deterministic svg") {
  kakeya::RenderOptions opt;
  opt.cells = 101;
  opt.view_radius = 0.5;
  opt.circle_radii = {0.25};
  const std::vector<BitString> strings = {BitString::parse("1010"), BitString::parse("1011")};
  const std::string svg = kakeya::render_zero_sets(strings, opt);
  REQUIRE(svg.find("<svg xmlns") == 0);
  REQUIRE(svg.find("</svg>") != std::string::npos);
  REQUIRE(svg.find("<title>1010</title>") != std::string::npos);
  REQUIRE(svg.find("<title>1011</title>") != std::string::npos);
  REQUIRE(svg.find("fill-opacity=") != std::string::npos);
  REQUIRE(svg.find("<circle") != std::string::npos);
  REQUIRE(svg == kakeya::render_zero_sets(strings, opt));
  REQUIRE_THROWS_AS(kakeya::render_zero_sets({BitString::parse("1010101")}, opt),
                    std::invalid_argument);
}
