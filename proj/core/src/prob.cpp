#include "sdht/prob.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

namespace sdht {

namespace {

constexpr double kMassTol = 1e-12;

void check_same_alphabet(const FiniteDistribution& p,
                         const FiniteDistribution& q, const char* op) {
  if (p.size() != q.size()) {
    throw dimension_error(std::string(op) + ": alphabet mismatch (" +
                          std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  }
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw dimension_error("FiniteDistribution: empty alphabet");
  }
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || p > 1.0) {
      throw precondition_error("FiniteDistribution: entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kMassTol) {
    throw precondition_error("FiniteDistribution: mass " +
                             std::to_string(sum) + " not within 1e-12 of 1");
  }
}

FiniteDistribution FiniteDistribution::bernoulli(double p) {
  return FiniteDistribution({1.0 - p, p});
}

FiniteDistribution FiniteDistribution::point_mass(std::size_t m,
                                                  std::size_t x) {
  if (x >= m) {
    throw dimension_error("point_mass: symbol index out of range");
  }
  std::vector<double> probs(m, 0.0);
  probs[x] = 1.0;
  return FiniteDistribution(std::move(probs));
}

FiniteDistribution FiniteDistribution::uniform(std::size_t m) {
  if (m == 0) {
    throw dimension_error("uniform: empty alphabet");
  }
  return FiniteDistribution(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

Histogram::Histogram(std::vector<uint32_t> counts_in, uint32_t n_in)
    : counts(std::move(counts_in)), n(n_in) {
  uint64_t sum = std::accumulate(counts.begin(), counts.end(), uint64_t{0});
  if (sum != n) {
    throw precondition_error("Histogram: counts sum to " + std::to_string(sum) +
                             ", expected " + std::to_string(n));
  }
}

Histogram Histogram::of_counts(std::vector<uint32_t> counts_in) {
  uint64_t sum =
      std::accumulate(counts_in.begin(), counts_in.end(), uint64_t{0});
  return Histogram(std::move(counts_in), static_cast<uint32_t>(sum));
}

ExchangeableLaw::ExchangeableLaw(uint32_t n, std::vector<Component> components)
    : n_(n), components_(std::move(components)) {
  if (components_.empty()) {
    throw precondition_error("ExchangeableLaw: no mixture components");
  }
  std::size_t m = components_.front().second.size();
  double total = 0.0;
  for (const auto& [w, marginal] : components_) {
    if (marginal.size() != m) {
      throw dimension_error("ExchangeableLaw: components disagree on alphabet");
    }
    if (!(w >= 0.0)) {
      throw precondition_error("ExchangeableLaw: negative component weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw precondition_error("ExchangeableLaw: weights sum to " +
                             std::to_string(total));
  }
}

std::size_t ExchangeableLaw::alphabet_size() const {
  return components_.front().second.size();
}

double tv_distance(const FiniteDistribution& p, const FiniteDistribution& q) {
  check_same_alphabet(p, q, "tv_distance");
  double sum = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    sum += std::abs(p[x] - q[x]);
  }
  return 0.5 * sum;
}

double hellinger_sq(const FiniteDistribution& p, const FiniteDistribution& q) {
  check_same_alphabet(p, q, "hellinger_sq");
  double sum = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    double u = p[x], v = q[x];
    if (u == 0.0 && v == 0.0) continue;
    // (sqrt u - sqrt v)^2 without the subtractive cancellation of the naive
    // form: square of the difference quotient (u - v)/(sqrt u + sqrt v).
    double d = (u - v) / (std::sqrt(u) + std::sqrt(v));
    sum += d * d;
  }
  return sum;
}

DeterministicTest best_deterministic_test(const FiniteDistribution& p,
                                          const FiniteDistribution& q) {
  check_same_alphabet(p, q, "best_deterministic_test");
  DeterministicTest test;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (q[x] > p[x]) test.accept_set.push_back(x);
  }
  test.score = 1.0 + tv_distance(p, q);
  return test;
}

ExchangeableLaw iid_law(const FiniteDistribution& marginal, uint32_t n) {
  if (n == 0) {
    throw precondition_error("iid_law: n must be at least 1");
  }
  return ExchangeableLaw(n, {{1.0, marginal}});
}

ExchangeableLaw mix_laws(
    const std::vector<std::pair<double, ExchangeableLaw>>& components) {
  if (components.empty()) {
    throw precondition_error("mix_laws: no components");
  }
  uint32_t n = components.front().second.n();
  std::size_t m = components.front().second.alphabet_size();
  std::vector<ExchangeableLaw::Component> flat;
  for (const auto& [w, law] : components) {
    if (law.n() != n) {
      throw dimension_error("mix_laws: components disagree on n");
    }
    if (law.alphabet_size() != m) {
      throw dimension_error("mix_laws: components disagree on alphabet");
    }
    for (const auto& [iw, marginal] : law.components()) {
      flat.emplace_back(w * iw, marginal);
    }
  }
  return ExchangeableLaw(n, std::move(flat));
}

uint64_t histogram_count(std::size_t m, uint32_t n) {
  if (m == 0) {
    throw dimension_error("histogram_count: empty alphabet");
  }
  // C(n+m-1, m-1) by the multiplicative formula, saturating on overflow.
  uint64_t result = 1;
  for (uint64_t i = 1; i < m; ++i) {
    unsigned __int128 next =
        static_cast<unsigned __int128>(result) * (n + i);
    next /= i;
    if (next > std::numeric_limits<uint64_t>::max()) {
      return std::numeric_limits<uint64_t>::max();
    }
    result = static_cast<uint64_t>(next);
  }
  return result;
}

void check_enumeration_budget(std::size_t m, uint32_t n, const char* op) {
  uint64_t count = histogram_count(m, n);
  if (count > kEnumerationBudget) {
    throw budget_error(std::string(op) + ": " + std::to_string(count) +
                       " histograms exceed the exact-enumeration budget of " +
                       std::to_string(kEnumerationBudget) +
                       "; use the Monte Carlo path");
  }
}

double log_multinomial(const Histogram& h) {
  double value = std::lgamma(static_cast<double>(h.n) + 1.0);
  for (uint32_t c : h.counts) {
    value -= std::lgamma(static_cast<double>(c) + 1.0);
  }
  return value;
}

double log_sequence_prob(const FiniteDistribution& marginal,
                         const Histogram& h) {
  if (marginal.size() != h.counts.size()) {
    throw dimension_error("log_sequence_prob: alphabet mismatch");
  }
  double value = 0.0;
  for (std::size_t y = 0; y < h.counts.size(); ++y) {
    if (h.counts[y] == 0) continue;
    if (marginal[y] == 0.0) {
      return -std::numeric_limits<double>::infinity();
    }
    value += static_cast<double>(h.counts[y]) * std::log(marginal[y]);
  }
  return value;
}

double sequence_prob(const ExchangeableLaw& law, const Histogram& h) {
  double total = 0.0;
  for (const auto& [w, marginal] : law.components()) {
    double lp = log_sequence_prob(marginal, h);
    if (lp == -std::numeric_limits<double>::infinity()) continue;
    total += w * std::exp(lp);
  }
  return total;
}

double histogram_prob(const ExchangeableLaw& law, const Histogram& h) {
  if (h.counts.size() != law.alphabet_size()) {
    throw dimension_error("histogram_prob: alphabet mismatch");
  }
  if (h.n != law.n()) {
    throw dimension_error("histogram_prob: sample-count mismatch");
  }
  double lm = log_multinomial(h);
  double total = 0.0;
  for (const auto& [w, marginal] : law.components()) {
    double lp = log_sequence_prob(marginal, h);
    if (lp == -std::numeric_limits<double>::infinity()) continue;
    total += w * std::exp(lm + lp);
  }
  return total;
}

double law_tv(const ExchangeableLaw& l1, const ExchangeableLaw& l2) {
  if (l1.alphabet_size() != l2.alphabet_size()) {
    throw dimension_error("law_tv: alphabet mismatch");
  }
  if (l1.n() != l2.n()) {
    throw dimension_error("law_tv: sample-count mismatch");
  }
  std::size_t m = l1.alphabet_size();
  uint32_t n = l1.n();
  check_enumeration_budget(m, n, "law_tv");
  double sum = 0.0;
  for_each_histogram(m, n, [&](const Histogram& h) {
    sum += std::abs(histogram_prob(l1, h) - histogram_prob(l2, h));
  });
  return 0.5 * sum;
}

double symmetric_event_prob(
    const ExchangeableLaw& law,
    const std::function<bool(const Histogram&)>& predicate) {
  std::size_t m = law.alphabet_size();
  uint32_t n = law.n();
  check_enumeration_budget(m, n, "symmetric_event_prob");
  double sum = 0.0;
  for_each_histogram(m, n, [&](const Histogram& h) {
    if (predicate(h)) sum += histogram_prob(law, h);
  });
  return sum;
}

}  // namespace sdht
