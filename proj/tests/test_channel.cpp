#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sdht/channel.hpp"
#include "sdht/engine.hpp"
#include "sdht/errors.hpp"
#include "sdht/prob.hpp"
#include "sdht/rng.hpp"
#include "test_util.hpp"

using namespace sdht;
using sdht_test::random_channel;
using sdht_test::random_distribution;

namespace {

double rows_hellinger_sq(const Channel& w) {
  return hellinger_sq(w.row_distribution(0), w.row_distribution(1));
}

}  // namespace

TEST_CASE("channel construction validates stochastic rows") {
  CHECK_NOTHROW(Channel({{0.5, 0.5}, {0.2, 0.8}}));
  CHECK_THROWS_AS(Channel({{0.5, 0.6}, {0.2, 0.8}}), precondition_error);
  CHECK_THROWS_AS(Channel({{0.5, 0.5}, {0.2, 0.3, 0.5}}), dimension_error);
  CHECK_THROWS_AS(Channel({}), dimension_error);

  const Channel id = Channel::identity(3);
  CHECK(id.prob(0, 0) == 1.0);
  CHECK(id.prob(1, 0) == 0.0);
  CHECK(id.input_size() == 3);
}

TEST_CASE("push_forward preserves mass and is linear") {
  CounterRng rng(21, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(4));
    const std::size_t k = 2 + static_cast<std::size_t>(rng.below(4));
    const Channel w = random_channel(rng, m, k);
    const auto mu = random_distribution(rng, m);
    const auto nu = random_distribution(rng, m);
    const auto out = push_forward(w, mu);
    double mass = 0.0;
    for (std::size_t y = 0; y < out.size(); ++y) mass += out[y];
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

    // Linearity: W(theta mu + (1-theta) nu) = theta W mu + (1-theta) W nu.
    const double theta = 0.3;
    std::vector<double> mixed(m);
    for (std::size_t x = 0; x < m; ++x) {
      mixed[x] = theta * mu[x] + (1.0 - theta) * nu[x];
    }
    const auto lhs = push_forward(w, FiniteDistribution(mixed));
    const auto r1 = push_forward(w, mu);
    const auto r2 = push_forward(w, nu);
    for (std::size_t y = 0; y < k; ++y) {
      CHECK(lhs[y] ==
            doctest::Approx(theta * r1[y] + (1.0 - theta) * r2[y])
                .epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(
      push_forward(Channel::identity(3), FiniteDistribution::bernoulli(0.5)),
      dimension_error);
}

TEST_CASE("compose matches matrix product and is associative") {
  CounterRng rng(22, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t a = 2 + static_cast<std::size_t>(rng.below(3));
    const std::size_t b = 2 + static_cast<std::size_t>(rng.below(3));
    const std::size_t c = 2 + static_cast<std::size_t>(rng.below(3));
    const std::size_t d = 2 + static_cast<std::size_t>(rng.below(3));
    const Channel r = random_channel(rng, a, b);
    const Channel s = random_channel(rng, b, c);
    const Channel t = random_channel(rng, c, d);

    // compose(w, r): first r, then w.
    const Channel sr = compose(s, r);
    for (std::size_t u = 0; u < a; ++u) {
      const auto direct = push_forward(s, push_forward(r, FiniteDistribution::point_mass(a, u)));
      for (std::size_t y = 0; y < c; ++y) {
        CHECK(sr.prob(y, u) == doctest::Approx(direct[y]).epsilon(1e-12));
      }
    }

    const Channel lhs = compose(t, compose(s, r));
    const Channel rhs = compose(compose(t, s), r);
    for (std::size_t u = 0; u < a; ++u) {
      for (std::size_t y = 0; y < d; ++y) {
        CHECK(lhs.prob(y, u) == doctest::Approx(rhs.prob(y, u)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("collinearity_check finds planted witnesses and rejects others") {
  CounterRng rng(23, 0);
  int planted_found = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(4));
    const auto mu0 = random_distribution(rng, m);
    const auto mu1 = random_distribution(rng, m);
    const double theta = 0.1 + 0.8 * rng.unit();
    std::vector<double> mid(m);
    for (std::size_t x = 0; x < m; ++x) {
      mid[x] = theta * mu0[x] + (1.0 - theta) * mu1[x];
    }
    const auto witness =
        collinearity_check(mu0, FiniteDistribution(mid), mu1);
    REQUIRE(witness.has_value());
    if (!witness->degenerate) {
      ++planted_found;
      // The witness must reproduce the middle point from the endpoints.
      CHECK(witness->c == 1);
    }
  }
  CHECK(planted_found > 150);  // degenerate random collisions are rare

  // A genuinely non-collinear triple over alphabet 3.
  const FiniteDistribution a({0.8, 0.1, 0.1});
  const FiniteDistribution b({0.1, 0.8, 0.1});
  const FiniteDistribution c({0.1, 0.1, 0.8});
  CHECK_FALSE(collinearity_check(a, b, c).has_value());
}

TEST_CASE("separating_channel equalizes the pair and separates the third") {
  CounterRng rng(24, 0);
  int built = 0;
  int trial_budget = 0;
  while (built < 300 && trial_budget < 5000) {
    ++trial_budget;
    const std::size_t m = 3 + static_cast<std::size_t>(rng.below(3));
    const auto mu0 = random_distribution(rng, m);
    const auto mu1 = random_distribution(rng, m);
    const auto mu2 = random_distribution(rng, m);
    if (collinearity_check(mu0, mu1, mu2).has_value()) continue;
    const Channel w = separating_channel(mu0, mu1, mu2);
    ++built;
    CHECK(w.output_size() == 2);
    const auto f0 = push_forward(w, mu0);
    const auto f1 = push_forward(w, mu1);
    const auto f2 = push_forward(w, mu2);
    CHECK(std::abs(f0[1] - f1[1]) <= 1e-10);
    CHECK(std::abs(f2[1] - f0[1]) > 1e-9);
    for (std::size_t x = 0; x < m; ++x) {
      CHECK(w.prob(1, x) >= 1e-6 - 1e-15);
      CHECK(w.prob(1, x) <= 1.0 - 1e-6 + 1e-15);
    }
  }
  CHECK(built == 300);

  // Collinear triples cannot be separated this way.
  const auto p = FiniteDistribution::bernoulli(0.2);
  const auto q = FiniteDistribution::bernoulli(0.8);
  const auto mid = FiniteDistribution::bernoulli(0.5);
  CHECK_THROWS_AS(separating_channel(p, mid, q), construction_error);
}

TEST_CASE("sign_channel thresholds row-wise") {
  const FiniteDistribution mu0({0.5, 0.2, 0.3});
  const FiniteDistribution mu1({0.2, 0.5, 0.3});
  const Channel w = sign_channel(mu0, mu1);
  CHECK(w.output_size() == 2);
  CHECK(w.prob(1, 0) == 1.0);  // mu0(0) > mu1(0)
  CHECK(w.prob(1, 1) == 0.0);
  CHECK(w.prob(1, 2) == 0.0);  // ties map to 0
}

TEST_CASE("bernoulli_symmetrizer pins f(p0)+f(p1)=1 and separates p2") {
  CounterRng rng(25, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const double p0 = 0.05 + 0.9 * rng.unit();
    const double p1 = 0.05 + 0.9 * rng.unit();
    const double p2 = 0.05 + 0.9 * rng.unit();
    if (std::abs(p0 - p2) < 1e-3 || std::abs(p1 - p2) < 1e-3) continue;
    const auto sym = bernoulli_symmetrizer(p0, p1, p2);
    // p = f(p0) and 1-p = f(p1) by construction.
    const double m = std::min(1.0 / (p0 + p1), 1.0 / (2.0 - p0 - p1));
    const double k = (1.0 - m * (p0 + p1)) / 2.0;
    CHECK(sym.p == doctest::Approx(k + m * p0).epsilon(1e-12));
    CHECK((k + m * p0) + (k + m * p1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sym.q == doctest::Approx(k + m * p2).epsilon(1e-12));
    CHECK(std::abs(sym.q - sym.p) > 1e-9);
    CHECK(std::abs(sym.q - (1.0 - sym.p)) > 1e-9);
    // Channel rows are valid distributions on {0,1}.
    CHECK(sym.channel.input_size() == 2);
    CHECK(sym.channel.output_size() == 2);
  }
}

TEST_CASE("bernoulli_symmetrizer clamps boundary rounding") {
  // For this triple m+k rounds to 1 while 1-m-k evaluates to -5.55e-17;
  // the exact row is {1, 0} and construction must not reject it.
  const double p0 = 0.39583093834472705;
  const double p1 = 0.31091914386470143;
  const double p2 = 0.34288861792913672;
  const auto sym = bernoulli_symmetrizer(p0, p1, p2);
  CHECK(sym.channel.prob(0, 1) == 1.0);
  CHECK(sym.channel.prob(1, 1) == 0.0);
  const auto scheme = build_one_bit_scheme(FiniteDistribution::bernoulli(p0),
                                           FiniteDistribution::bernoulli(p1),
                                           FiniteDistribution::bernoulli(p2), 8);
  const auto rep = evaluate(scheme, {FiniteDistribution::bernoulli(p0),
                                     FiniteDistribution::bernoulli(p1)},
                            {FiniteDistribution::bernoulli(p2)});
  CHECK(rep.delta <= 1e-12);
}

TEST_CASE("likelihood_ratios sorts zero denominators last") {
  const Channel w({{0.4, 0.3, 0.3, 0.0}, {0.2, 0.6, 0.0, 0.2}});
  const auto ratios = likelihood_ratios(w);
  CHECK(ratios[0] == doctest::Approx(2.0));
  CHECK(ratios[1] == doctest::Approx(0.5));
  CHECK(std::isinf(ratios[2]));
  CHECK(ratios[3] == 0.0);

  const Channel sorted = sort_outputs_by_ratio(w);
  const auto sorted_ratios = likelihood_ratios(sorted);
  for (std::size_t i = 1; i < sorted_ratios.size(); ++i) {
    CHECK(sorted_ratios[i - 1] <= sorted_ratios[i]);
  }
}

TEST_CASE("gamma_star equalizes the first two likelihood ratios") {
  CounterRng rng(26, 0);
  int done = 0;
  while (done < 10000) {
    const Channel w = sort_outputs_by_ratio(
        random_channel(rng, 2, 3 + static_cast<std::size_t>(rng.below(3))));
    const double a0 = w.prob(0, 0), a1 = w.prob(0, 1);
    const double b0 = w.prob(1, 0), b1 = w.prob(1, 1);
    if (a1 <= 1e-12 || b1 <= 1e-12) continue;
    const double ra = a0 / a1, rb = b0 / b1;
    if (!(ra <= rb && rb < 1.0 - 1e-9)) continue;
    const double g = gamma_star(a0, a1, b0, b1);
    if (g >= 1.0) continue;  // degenerate unit-ratio column
    const Channel t = gamma_transform(w, g);
    ++done;
    const double r0 = t.prob(0, 0) / t.prob(0, 1);
    const double r1 = t.prob(1, 0) / t.prob(1, 1);
    CHECK(r0 == doctest::Approx(r1).epsilon(1e-9));
    // Column 1 itself is only rescaled, so its ratio is unchanged.
    CHECK(r1 == doctest::Approx(rb).epsilon(1e-12));
    // Rows stay stochastic.
    for (std::size_t x = 0; x < 2; ++x) {
      double mass = 0.0;
      for (std::size_t y = 0; y < t.output_size(); ++y) mass += t.prob(y, x);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("merging ratio-equal columns preserves row hellinger distance") {
  CounterRng rng(27, 0);
  int done = 0;
  while (done < 1000) {
    const Channel w = sort_outputs_by_ratio(
        random_channel(rng, 2, 3 + static_cast<std::size_t>(rng.below(3))));
    const double a0 = w.prob(0, 0), a1 = w.prob(0, 1);
    const double b0 = w.prob(1, 0), b1 = w.prob(1, 1);
    if (a1 <= 1e-12 || b1 <= 1e-12) continue;
    if (!(a0 / a1 <= b0 / b1 && b0 / b1 < 1.0 - 1e-9)) continue;
    const double g = gamma_star(a0, a1, b0, b1);
    if (g >= 1.0) continue;
    const Channel t = gamma_transform(w, g);
    const Channel merged = merge_symbols(t, 0, 1);
    ++done;
    CHECK(merged.output_size() == t.output_size() - 1);
    CHECK(rows_hellinger_sq(merged) ==
          doctest::Approx(rows_hellinger_sq(t)).epsilon(1e-12));
    // Mass of the merged column is the sum of its parents.
    CHECK(merged.prob(0, 0) == doctest::Approx(t.prob(0, 0) + t.prob(1, 0)));
  }

  // Merging columns with distinct ratios strictly changes the distance.
  const Channel w({{0.5, 0.3, 0.2}, {0.1, 0.3, 0.6}});
  const Channel merged = merge_symbols(w, 0, 1);
  CHECK(rows_hellinger_sq(merged) < rows_hellinger_sq(w));
}

TEST_CASE("gamma_transform requires sorted ratios and valid gamma") {
  const Channel sorted = sort_outputs_by_ratio(
      Channel({{0.1, 0.3, 0.6}, {0.4, 0.3, 0.3}}));
  CHECK_NOTHROW(gamma_transform(sorted, 0.1));
  CHECK_THROWS_AS(gamma_transform(sorted, -0.1), precondition_error);
  CHECK_THROWS_AS(gamma_transform(sorted, 1.5), precondition_error);
  // gamma = 1 is allowed here; it collapses all mass onto output 0.
  const Channel collapsed = gamma_transform(sorted, 1.0);
  CHECK(collapsed.prob(0, 0) == 1.0);
  CHECK(collapsed.prob(0, 1) == 1.0);
  const Channel unsorted({{0.6, 0.3, 0.1}, {0.3, 0.3, 0.4}});
  CHECK_THROWS_AS(gamma_transform(unsorted, 0.1), precondition_error);
}
