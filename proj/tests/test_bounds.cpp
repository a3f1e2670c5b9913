#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "sdht/bounds.hpp"
#include "sdht/channel.hpp"
#include "sdht/errors.hpp"
#include "sdht/prob.hpp"
#include "sdht/rng.hpp"
#include "test_util.hpp"

using namespace sdht;

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Draws a binary-input channel whose rows are interior (no zero entries).
Channel random_binary_input_channel(CounterRng& rng, std::size_t outputs) {
  std::vector<std::vector<double>> rows(2);
  for (auto& row : rows) {
    row.resize(outputs);
    double sum = 0.0;
    for (auto& v : row) {
      v = 0.05 + rng.unit();
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
  return Channel(rows);
}

}  // namespace

TEST_CASE("ratio instances validate their domain") {
  const auto inst = make_ratio_instance(0.5, 0.25, 0.5);
  CHECK(inst.theta == 0.5);
  CHECK(inst.a == 0.25);
  CHECK(inst.c == 0.5);
  CHECK(inst.c_prime == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(inst.k == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_AS(make_ratio_instance(0.0, 0.1, 0.1), precondition_error);
  CHECK_THROWS_AS(make_ratio_instance(1.0, 0.1, 0.1), precondition_error);
  CHECK_THROWS_AS(make_ratio_instance(0.5, -0.1, 0.1), precondition_error);
  CHECK_THROWS_AS(make_ratio_instance(0.5, 0.1, 0.0), precondition_error);
  CHECK_THROWS_AS(make_ratio_instance(0.5, 0.6, 0.5), precondition_error);
}

TEST_CASE("bernoulli hellinger distance stays exact near equality") {
  CHECK(bernoulli_hellinger_sq(0.3, 0.3) == 0.0);
  CHECK(bernoulli_hellinger_sq(0.0, 1.0) == doctest::Approx(2.0));
  CHECK(bernoulli_hellinger_sq(0.2, 0.7) ==
        bernoulli_hellinger_sq(0.7, 0.2));

  auto reference = [](double u, double v) -> long double {
    const long double ul = u, vl = v;
    auto dq = [](long double x, long double y) -> long double {
      if (x == y) return 0.0L;
      return (x - y) / (std::sqrt(x) + std::sqrt(y));
    };
    const long double d1 = dq(ul, vl);
    const long double d0 = dq(1.0L - ul, 1.0L - vl);
    return d1 * d1 + d0 * d0;
  };

  CounterRng rng(61, 0);
  for (int t = 0; t < 2000; ++t) {
    const double u = rng.unit();
    const double v = rng.unit();
    const long double want = reference(u, v);
    const double got = bernoulli_hellinger_sq(u, v);
    if (want == 0.0L) {
      CHECK(got == 0.0);
    } else {
      CHECK(std::abs(got - static_cast<double>(want)) <=
            1e-12 * static_cast<double>(want));
    }
  }

  // Near-equal pairs where u, v, 1-u, 1-v and their differences are all
  // exactly representable: the naive sqrt-difference form would lose most of
  // the leading digits, the difference-quotient form keeps full precision.
  for (int t = 0; t < 2000; ++t) {
    const double u =
        static_cast<double>(1 + rng.below((1u << 20) - 2)) / 1048576.0;
    const double v = u + static_cast<double>(1 + rng.below(15)) *
                             std::ldexp(1.0, -46);
    const long double want = reference(u, v);
    const double got = bernoulli_hellinger_sq(u, v);
    CHECK(std::abs(got - static_cast<double>(want)) <=
          1e-12 * static_cast<double>(want));
  }
}

TEST_CASE("closed forms agree with the generic ratio evaluation") {
  for (const double theta : {0.25, 0.5, 0.75}) {
    for (int i = 1; i <= 60; ++i) {
      const double c = static_cast<double>(i) / 61.0;
      const double generic = hellinger_ratio(make_ratio_instance(theta, 0.0, c));
      const double closed = hellinger_ratio_at_zero(c, theta);
      CHECK(closed == doctest::Approx(generic).epsilon(1e-10));
      // Boundary branch is the same functional evaluated at a = 1 - c.
      CHECK(boundary_ratio(theta, c) ==
            hellinger_ratio(make_ratio_instance(theta, 1.0 - c, c)));
    }
  }
  CHECK_THROWS_AS(hellinger_ratio_at_zero(0.0, 0.5), precondition_error);
  CHECK_THROWS_AS(hellinger_ratio_at_zero(1.0, 0.5), precondition_error);
  CHECK_THROWS_AS(boundary_ratio(0.5, 0.0), precondition_error);
  CHECK_THROWS_AS(boundary_ratio(0.5, 1.5), precondition_error);
}

TEST_CASE("ratio limit closed form") {
  CHECK(ratio_limit(0.5) ==
        doctest::Approx(3.0 + 2.0 * kSqrt2).epsilon(1e-14));
  const double rk25 = std::sqrt(1.0 / 0.75);
  CHECK(ratio_limit(0.25) ==
        doctest::Approx(1.0 / ((rk25 - 1.0) * (rk25 - 1.0))).epsilon(1e-14));
  CHECK(ratio_limit(0.75) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(ratio_limit(0.0), precondition_error);
  CHECK_THROWS_AS(ratio_limit(1.0), precondition_error);
}

TEST_CASE("hellinger derivative quotient identity") {
  // The raw quotient is 0/0 at p=q and its denominator vanishes like
  // (p-q)^2, so double evaluation near the diagonal is dominated by rounding;
  // the identity check needs separated pairs.
  CounterRng rng(62, 0);
  int done = 0;
  while (done < 10000) {
    const double p = 0.01 + 0.98 * rng.unit();
    const double q = 0.01 + 0.98 * rng.unit();
    if (std::abs(p - q) < 0.01) continue;
    ++done;
    const auto id = hellinger_quotient_identity(p, q);
    CHECK_FALSE(id.raw_indeterminate);
    CHECK(id.gap <= 1e-10);
  }
  const auto same = hellinger_quotient_identity(0.37, 0.37);
  CHECK(same.raw_indeterminate);
  CHECK(same.lhs == same.rhs);
  CHECK(same.gap == 0.0);
  CHECK_THROWS_AS(hellinger_quotient_identity(0.0, 0.5), precondition_error);
  CHECK_THROWS_AS(hellinger_quotient_identity(0.5, 1.0), precondition_error);
}

TEST_CASE("transform growth kernel is increasing and continuous at one") {
  for (const double theta : {0.25, 0.5, 0.75}) {
    const double log_lo = std::log(1e-6);
    const double log_hi = std::log(1e6);
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
      const double t =
          std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / 999.0);
      const double value = transform_growth_kernel(t, theta);
      CHECK(value > prev);
      prev = value;
    }
    const double at_one = std::pow((1.0 - theta) / theta, 2.0);
    CHECK(transform_growth_kernel(1.0, theta) ==
          doctest::Approx(at_one).epsilon(1e-14));
    CHECK(transform_growth_kernel(1.0 - 1e-9, theta) ==
          doctest::Approx(at_one).epsilon(1e-6));
    CHECK(transform_growth_kernel(1.0 + 1e-9, theta) ==
          doctest::Approx(at_one).epsilon(1e-6));
  }
  CHECK_THROWS_AS(transform_growth_kernel(0.0, 0.5), precondition_error);
  CHECK_THROWS_AS(transform_growth_kernel(-1.0, 0.5), precondition_error);
}

TEST_CASE("the a=0 edge dominates the ratio functional") {
  CounterRng rng(63, 0);
  for (const double theta : {0.25, 0.5, 0.75}) {
    for (int t = 0; t < 2000; ++t) {
      const double c = 1e-6 + (1.0 - 2e-6) * rng.unit();
      const double a = (1.0 - c) * rng.unit();
      const double inner = hellinger_ratio(make_ratio_instance(theta, a, c));
      const double edge = hellinger_ratio(make_ratio_instance(theta, 0.0, c));
      CHECK(inner <= edge + 1e-9);
    }
    // Along the edge the ratio grows as c shrinks.
    double prev = 2.0;  // above every value for theta >= 0.25
    prev = hellinger_ratio(make_ratio_instance(theta, 0.0, 1e-9));
    for (int i = 1; i <= 500; ++i) {
      const double c = static_cast<double>(i) / 501.0;
      const double value = hellinger_ratio(make_ratio_instance(theta, 0.0, c));
      CHECK(value <= prev + 1e-9);
      prev = value;
    }
  }
}

TEST_CASE("grid supremum certifies the closed-form limit") {
  const auto sup = sup_ratio_binary(0.5, 400);
  CHECK(sup.max_value == doctest::Approx(5.8284271247426753).epsilon(1e-12));
  CHECK(sup.argmax.a == 0.0);
  CHECK(sup.argmax.c <= 1e-6);

  for (const double theta : {0.25, 0.5, 0.75}) {
    const auto result = sup_ratio_binary(theta, 400);
    const double cap = ratio_limit(theta);
    CHECK(result.max_value >= 0.95 * cap);
    CHECK(result.max_value <= cap + 1e-9);
  }
  CHECK_THROWS_AS(sup_ratio_binary(0.5, 99), precondition_error);
}

TEST_CASE("ratio floor is the reciprocal of the certified limit") {
  CHECK(ratio_floor(0.5) ==
        doctest::Approx(3.0 - 2.0 * kSqrt2).epsilon(1e-12));
  CHECK(ratio_floor(0.5) * ratio_limit(0.5) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ratio_floor(0.75) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("general channel ratio matches the binary functional") {
  CHECK_THROWS_AS(
      general_channel_ratio(Channel({{0.5, 0.5}, {0.5, 0.5}, {1.0, 0.0}}), 0.5),
      dimension_error);
  CHECK_THROWS_AS(general_channel_ratio(Channel({{0.3, 0.7}, {0.3, 0.7}}), 0.5),
                  precondition_error);

  CounterRng rng(64, 0);
  for (const double theta : {0.25, 0.5, 0.75}) {
    const double cap = ratio_limit(theta);
    for (int t = 0; t < 1000; ++t) {
      const Channel w = random_binary_input_channel(rng, 2);
      const double u0 = w.prob(0, 0);
      const double u1 = w.prob(0, 1);
      if (std::abs(u0 - u1) < 1e-9) continue;
      const double ratio = general_channel_ratio(w, theta);
      // Same functional in the (a, c) chart over the output symbol where the
      // first row carries the larger mass: a is the second row's mass there.
      const double a = u0 > u1 ? u1 : 1.0 - u1;
      const double c = std::abs(u0 - u1);
      const double chart = hellinger_ratio(make_ratio_instance(theta, a, c));
      CHECK(ratio == doctest::Approx(chart).epsilon(1e-9));
      CHECK(ratio <= cap + 1e-9);
      // Impossibility orientation: the near-end Hellinger mass cannot be
      // arbitrarily small next to the far-end one.
      CHECK(1.0 / ratio >= ratio_floor(theta) - 1e-9);
    }
  }
}

TEST_CASE("reduction to two outputs follows the frozen trace") {
  const Channel w({{0.1, 0.15, 0.25, 0.5}, {0.2, 0.25, 0.3, 0.25}});
  const auto result = reduce_to_binary(w, 0.5);
  CHECK_FALSE(result.input_flipped);
  REQUIRE(result.trace.size() == 3);
  CHECK(result.trace[0] ==
        doctest::Approx(1.0733899089234853).epsilon(1e-12));
  CHECK(result.trace[1] ==
        doctest::Approx(1.1190613440931036).epsilon(1e-12));
  CHECK(result.trace[2] ==
        doctest::Approx(1.2839382655596958).epsilon(1e-12));
  CHECK(result.channel.output_size() == 2);
  CHECK(result.channel.input_size() == 2);

  // Swapping the input labels only flips the flag.
  const Channel swapped({{0.2, 0.25, 0.3, 0.25}, {0.1, 0.15, 0.25, 0.5}});
  const auto flipped = reduce_to_binary(swapped, 0.5);
  CHECK(flipped.input_flipped);
  REQUIRE(flipped.trace.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(flipped.trace[i] == result.trace[i]);
  }
}

TEST_CASE("reduction validates its inputs and degenerate instances") {
  CHECK_THROWS_AS(
      reduce_to_binary(Channel({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}), 0.5),
      dimension_error);
  CHECK_THROWS_AS(reduce_to_binary(Channel({{1.0}, {1.0}}), 0.5),
                  precondition_error);
  CHECK_THROWS_AS(
      reduce_to_binary(Channel({{0.1, 0.15, 0.25, 0.5}, {0.2, 0.25, 0.3, 0.25}}),
                       0.0),
      precondition_error);
  // A unit likelihood ratio in second position degenerates the transform.
  CHECK_THROWS_AS(
      reduce_to_binary(
          Channel({{0.1, 0.2, 0.3, 0.4}, {0.2, 0.25, 0.3, 0.25}}), 0.5),
      construction_error);
  // Two ratios above one under both labelings: out of the method's scope.
  CHECK_THROWS_AS(
      reduce_to_binary(Channel({{0.1, 0.2, 0.3, 0.4}, {0.4, 0.3, 0.2, 0.1}}),
                       0.5),
      construction_error);
}

TEST_CASE("reduction grows the ratio monotonically on random channels") {
  CounterRng rng(65, 0);
  int done = 0;
  int attempts = 0;
  while (done < 1000 && attempts < 20000) {
    ++attempts;
    const std::size_t outputs = 3 + static_cast<std::size_t>(rng.below(4));
    const Channel w = random_binary_input_channel(rng, outputs);
    const double theta = 0.25 + 0.5 * rng.unit();
    std::optional<ReductionResult> maybe;
    try {
      maybe = reduce_to_binary(w, theta);
    } catch (const construction_error&) {
      continue;  // either labeling kept two ratios above one; redraw
    }
    const ReductionResult& result = *maybe;
    REQUIRE(result.trace.size() == outputs - 1);
    CHECK(result.channel.output_size() == 2);
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
      CHECK(result.trace[i] >= result.trace[i - 1] - 1e-9);
    }
    CHECK(result.trace.back() >= result.trace.front() - 1e-9);
    CHECK(result.trace.back() <= ratio_limit(theta) + 1e-9);
    CHECK(general_channel_ratio(result.channel, theta) ==
          doctest::Approx(result.trace.back()).epsilon(1e-12));
    ++done;
  }
  CHECK(done == 1000);
}

TEST_CASE("tradeoff audit on collinear pushforward laws") {
  CounterRng rng(66, 0);
  const double lambda = 3.0 - 2.0 * kSqrt2;
  const double bound = 1.0 - std::exp((std::sqrt(3.0) / 2.0 - 1.0) * lambda);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(3));
    const auto mu0 = sdht_test::random_distribution(rng, m);
    const auto mu2 = sdht_test::random_distribution(rng, m);
    std::vector<double> mixed(m);
    for (std::size_t x = 0; x < m; ++x) {
      mixed[x] = 0.5 * mu0[x] + 0.5 * mu2[x];
    }
    const FiniteDistribution mu1(mixed);
    const Channel w = sdht_test::random_channel(rng, m, 2);
    const uint32_t n = 1 + static_cast<uint32_t>(rng.below(12));
    const auto record = tradeoff_audit(iid_law(push_forward(w, mu0), n),
                                       iid_law(push_forward(w, mu1), n),
                                       iid_law(push_forward(w, mu2), n), 0.5);
    CHECK(record.lambda == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(record.bound ==
          doctest::Approx(0.022724231898356706).epsilon(1e-12));
    CHECK(record.bound == doctest::Approx(bound).epsilon(1e-14));
    CHECK((record.first_disjunct || record.second_disjunct));
    CHECK(record.tv12 >= 0.0);
    CHECK(record.tv12 <= 1.0 + 1e-12);
    CHECK(record.tv01 >= 0.0);
    CHECK(record.tv01 <= 1.0 + 1e-12);
  }

  // Violating the mixture premise defeats both disjuncts and trips the audit.
  const auto far1 = iid_law(FiniteDistribution::bernoulli(0.01), 10);
  const auto far2 = iid_law(FiniteDistribution::bernoulli(0.99), 10);
  CHECK_THROWS_AS(tradeoff_audit(far1, far1, far2, 0.5), audit_error);
}
