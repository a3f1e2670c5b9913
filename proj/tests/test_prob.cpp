#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdht/errors.hpp"
#include "sdht/prob.hpp"
#include "sdht/rng.hpp"
#include "test_util.hpp"

using namespace sdht;
using sdht_test::random_distribution;

TEST_CASE("distribution constructors validate mass and range") {
  CHECK_NOTHROW(FiniteDistribution({0.5, 0.5}));
  CHECK_THROWS_AS(FiniteDistribution({0.5, 0.4}), precondition_error);
  CHECK_THROWS_AS(FiniteDistribution({1.2, -0.2}), precondition_error);
  CHECK_THROWS_AS(FiniteDistribution({}), dimension_error);

  const auto b = FiniteDistribution::bernoulli(0.3);
  CHECK(b.size() == 2);
  CHECK(b[1] == doctest::Approx(0.3));  // symbol 1 carries mass p
  CHECK(b[0] == doctest::Approx(0.7));
  CHECK_THROWS_AS(FiniteDistribution::bernoulli(1.5), precondition_error);

  const auto pm = FiniteDistribution::point_mass(4, 2);
  CHECK(pm[2] == 1.0);
  CHECK_THROWS_AS(FiniteDistribution::point_mass(4, 4), dimension_error);

  const auto u = FiniteDistribution::uniform(5);
  CHECK(u[0] == doctest::Approx(0.2));
}

TEST_CASE("tv distance basics") {
  const auto p = FiniteDistribution::bernoulli(0.2);
  const auto q = FiniteDistribution::bernoulli(0.7);
  CHECK(tv_distance(p, q) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(tv_distance(p, p) == 0.0);
  CHECK_THROWS_AS(
      tv_distance(p, FiniteDistribution::uniform(3)), dimension_error);

  const auto a = FiniteDistribution::point_mass(3, 0);
  const auto b = FiniteDistribution::point_mass(3, 2);
  CHECK(tv_distance(a, b) == doctest::Approx(1.0));
}

TEST_CASE("hellinger_sq basics and cancellation-free accuracy") {
  const auto a = FiniteDistribution::point_mass(2, 0);
  const auto b = FiniteDistribution::point_mass(2, 1);
  CHECK(hellinger_sq(a, b) == doctest::Approx(2.0));  // disjoint supports
  CHECK(hellinger_sq(a, a) == 0.0);

  // Nearly equal Bernoullis: compare against the difference-quotient form
  // evaluated in long double.
  const double u = 0.37;
  const double v = 0.37 + 1e-13;
  const auto pu = FiniteDistribution::bernoulli(u);
  const auto pv = FiniteDistribution::bernoulli(v);
  auto term = [](long double x, long double y) {
    const long double d = x - y;
    const long double s = std::sqrt(x) + std::sqrt(y);
    return (d / s) * (d / s);
  };
  const long double ref = term(1.0L - u, 1.0L - v) + term(u, v);
  CHECK(hellinger_sq(pu, pv) ==
        doctest::Approx(static_cast<double>(ref)).epsilon(1e-6));
  CHECK(hellinger_sq(pu, pv) > 0.0);
}

TEST_CASE("tv and hellinger obey the sandwich inequalities") {
  CounterRng rng(2024, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(5));
    const auto p = random_distribution(rng, m);
    const auto q = random_distribution(rng, m);
    const double s = hellinger_sq(p, q);
    const double tv = tv_distance(p, q);
    CHECK(tv >= s / 2.0 - 1e-10);
    CHECK(tv <= std::sqrt(s * (4.0 - s)) / 2.0 + 1e-10);
  }
}

TEST_CASE("best_deterministic_test score is exactly one plus tv") {
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(5));
    const auto p = random_distribution(rng, m);
    const auto q = random_distribution(rng, m);
    const auto test = best_deterministic_test(p, q);
    CHECK(test.score == 1.0 + tv_distance(p, q));  // same float path, exact
    for (std::size_t y : test.accept_set) CHECK(q[y] > p[y]);
    double acc_q = 0.0;
    double acc_p = 0.0;
    for (std::size_t y : test.accept_set) {
      acc_q += q[y];
      acc_p += p[y];
    }
    CHECK(acc_q - acc_p == doctest::Approx(tv_distance(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("histogram_count matches stars and bars and saturates") {
  CHECK(histogram_count(1, 10) == 1);
  CHECK(histogram_count(2, 10) == 11);
  CHECK(histogram_count(3, 4) == 15);
  CHECK(histogram_count(64, 64) == UINT64_MAX);  // astronomically large
}

TEST_CASE("for_each_histogram enumerates ascending and completely") {
  std::vector<std::vector<uint32_t>> seen;
  for_each_histogram(3, 4, [&](const Histogram& h) {
    CHECK(h.counts[0] + h.counts[1] + h.counts[2] == 4);
    seen.push_back(h.counts);
  });
  CHECK(seen.size() == histogram_count(3, 4));
  for (std::size_t i = 1; i < seen.size(); ++i) {
    CHECK(seen[i - 1] < seen[i]);  // strictly ascending lexicographic
  }
  CHECK(seen.front() == std::vector<uint32_t>{0, 0, 4});
  CHECK(seen.back() == std::vector<uint32_t>{4, 0, 0});
}

TEST_CASE("log_multinomial and sequence_prob small cases") {
  const Histogram h({2, 1}, 3);
  CHECK(log_multinomial(h) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  const auto p = FiniteDistribution::bernoulli(0.25);
  const auto law = iid_law(p, 3);
  // One particular sequence with two 0s and one 1.
  CHECK(sequence_prob(law, h) ==
        doctest::Approx(0.75 * 0.75 * 0.25).epsilon(1e-12));
  CHECK(histogram_prob(law, h) ==
        doctest::Approx(3.0 * 0.75 * 0.75 * 0.25).epsilon(1e-12));
}

TEST_CASE("histogram_prob handles impossible symbols") {
  const auto p = FiniteDistribution::point_mass(2, 0);
  const auto law = iid_law(p, 2);
  CHECK(histogram_prob(law, Histogram({2, 0}, 2)) == doctest::Approx(1.0));
  CHECK(histogram_prob(law, Histogram({1, 1}, 2)) == 0.0);
}

TEST_CASE("mix_laws weights must be a distribution over same-shape laws") {
  const auto p = FiniteDistribution::bernoulli(0.2);
  const auto q = FiniteDistribution::bernoulli(0.8);
  const auto mixed = mix_laws({{0.5, iid_law(p, 4)}, {0.5, iid_law(q, 4)}});
  CHECK(mixed.n() == 4);
  CHECK(mixed.components().size() == 2);
  CHECK_THROWS_AS(
      mix_laws({{0.7, iid_law(p, 4)}, {0.7, iid_law(q, 4)}}),
      precondition_error);
  CHECK_THROWS_AS(
      mix_laws({{0.5, iid_law(p, 4)}, {0.5, iid_law(q, 5)}}),
      dimension_error);
}

TEST_CASE("law_tv matches brute-force sequence enumeration") {
  CounterRng rng(11, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t m = (trial % 2 == 0) ? 2 : 3;
    const uint32_t n = (m == 2) ? 10 : 6;
    const auto p0 = random_distribution(rng, m);
    const auto p1 = random_distribution(rng, m);
    const auto p2 = random_distribution(rng, m);
    const auto l1 = mix_laws({{0.4, iid_law(p0, n)}, {0.6, iid_law(p1, n)}});
    const auto l2 = iid_law(p2, n);
    CHECK(law_tv(l1, l2) ==
          doctest::Approx(sdht_test::oracle_law_tv(l1, l2)).epsilon(1e-12));
    CHECK(law_tv(l1, l1) == doctest::Approx(0.0));
  }
}

TEST_CASE("symmetric_event_prob matches brute-force sequence enumeration") {
  CounterRng rng(12, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t m = (trial % 2 == 0) ? 2 : 3;
    const uint32_t n = (m == 2) ? 10 : 6;
    const auto p0 = random_distribution(rng, m);
    const auto p1 = random_distribution(rng, m);
    const auto law = mix_laws({{0.3, iid_law(p0, n)}, {0.7, iid_law(p1, n)}});
    const uint32_t cut = 1 + static_cast<uint32_t>(rng.below(n));
    auto predicate = [cut](const Histogram& h) { return h.counts[0] >= cut; };
    CHECK(symmetric_event_prob(law, predicate) ==
          doctest::Approx(sdht_test::oracle_event_prob(law, predicate))
              .epsilon(1e-12));
  }
}

TEST_CASE("law probabilities sum to one over histograms") {
  CounterRng rng(13, 0);
  const auto p = random_distribution(rng, 4);
  const auto law = iid_law(p, 6);
  double total = 0.0;
  for_each_histogram(4, 6, [&](const Histogram& h) {
    total += histogram_prob(law, h);
  });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hellinger tensorizes through law-level bhattacharyya") {
  CounterRng rng(14, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(3));
    const uint32_t n = 2 + static_cast<uint32_t>(rng.below(11));  // up to 12
    const auto p = random_distribution(rng, m);
    const auto q = random_distribution(rng, m);
    const auto lp = iid_law(p, n);
    const auto lq = iid_law(q, n);
    double law_bc = 0.0;
    for_each_histogram(m, n, [&](const Histogram& h) {
      law_bc += std::sqrt(histogram_prob(lp, h) * histogram_prob(lq, h));
    });
    double marginal_bc = 0.0;
    for (std::size_t y = 0; y < m; ++y) marginal_bc += std::sqrt(p[y] * q[y]);
    CHECK(law_bc ==
          doctest::Approx(std::pow(marginal_bc, n)).epsilon(1e-9));
    // Same statement through hellinger_sq = 2 * (1 - bhattacharyya).
    CHECK(hellinger_sq(p, q) ==
          doctest::Approx(2.0 * (1.0 - marginal_bc)).epsilon(1e-9));
  }
}

TEST_CASE("enumeration budget refusals") {
  CHECK_THROWS_AS(check_enumeration_budget(40, 40, "test"), budget_error);
  CHECK_NOTHROW(check_enumeration_budget(2, 100, "test"));
  const auto p = FiniteDistribution::uniform(40);
  const auto law = iid_law(p, 40);
  CHECK_THROWS_AS(law_tv(law, law), budget_error);
  CHECK_THROWS_AS(
      symmetric_event_prob(law, [](const Histogram&) { return true; }),
      budget_error);
}
