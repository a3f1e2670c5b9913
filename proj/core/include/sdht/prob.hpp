#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sdht/errors.hpp"

namespace sdht {

// Probability vector over alphabet indices 0..m-1.
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> probs);

  // Symbol 1 carries mass p.
  static FiniteDistribution bernoulli(double p);
  static FiniteDistribution point_mass(std::size_t m, std::size_t x);
  static FiniteDistribution uniform(std::size_t m);

  std::size_t size() const { return probs_.size(); }
  double at(std::size_t x) const { return probs_[x]; }
  double operator[](std::size_t x) const { return probs_[x]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Occupancy counts of an n-sample sequence.
struct Histogram {
  std::vector<uint32_t> counts;
  uint32_t n = 0;

  Histogram() = default;
  Histogram(std::vector<uint32_t> counts_in, uint32_t n_in);
  static Histogram of_counts(std::vector<uint32_t> counts_in);
};

// Finite mixture of i.i.d. n-sample product laws.
class ExchangeableLaw {
 public:
  using Component = std::pair<double, FiniteDistribution>;

  ExchangeableLaw(uint32_t n, std::vector<Component> components);

  uint32_t n() const { return n_; }
  std::size_t alphabet_size() const;
  const std::vector<Component>& components() const { return components_; }

 private:
  uint32_t n_;
  std::vector<Component> components_;
};

// ---- Divergences ----------------------------------------------------------

double tv_distance(const FiniteDistribution& p, const FiniteDistribution& q);

// Sum over symbols of (sqrt p - sqrt q)^2, evaluated through the
// cancellation-free difference-quotient form; range [0, 2].
double hellinger_sq(const FiniteDistribution& p, const FiniteDistribution& q);

struct DeterministicTest {
  std::vector<std::size_t> accept_set;  // symbols where q strictly exceeds p
  double score;                         // 1 + tv_distance(p, q), same float path
};
DeterministicTest best_deterministic_test(const FiniteDistribution& p,
                                          const FiniteDistribution& q);

// ---- Exchangeable laws ----------------------------------------------------

ExchangeableLaw iid_law(const FiniteDistribution& marginal, uint32_t n);
ExchangeableLaw mix_laws(
    const std::vector<std::pair<double, ExchangeableLaw>>& components);

double histogram_prob(const ExchangeableLaw& law, const Histogram& h);
double law_tv(const ExchangeableLaw& l1, const ExchangeableLaw& l2);
double symmetric_event_prob(
    const ExchangeableLaw& law,
    const std::function<bool(const Histogram&)>& predicate);

// ---- Exact-path plumbing --------------------------------------------------

// Exact enumeration refuses above this many histograms.
inline constexpr uint64_t kEnumerationBudget = 10'000'000;

// C(n+m-1, m-1), saturating at UINT64_MAX on overflow.
uint64_t histogram_count(std::size_t m, uint32_t n);

// Throws budget_error when histogram_count(m, n) exceeds the budget.
void check_enumeration_budget(std::size_t m, uint32_t n, const char* op);

// log of the multinomial coefficient n! / prod counts[y]!.
double log_multinomial(const Histogram& h);

// log prod_y marginal(y)^counts[y]; -inf when an impossible symbol occurs.
double log_sequence_prob(const FiniteDistribution& marginal, const Histogram& h);

// Probability of one particular sequence with occupancy h under the law.
double sequence_prob(const ExchangeableLaw& law, const Histogram& h);

// Visits every histogram over m symbols summing to n, ascending in the
// lexicographic order of counts. The Histogram object is reused across calls.
template <class F>
void for_each_histogram(std::size_t m, uint32_t n, F&& visit) {
  if (m == 0) throw dimension_error("for_each_histogram: empty alphabet");
  Histogram h;
  h.counts.assign(m, 0);
  h.n = n;
  if (m == 1) {
    h.counts[0] = n;
    visit(static_cast<const Histogram&>(h));
    return;
  }
  uint64_t prefix = 0;  // running sum of the free coordinates 0..m-2
  for (;;) {
    h.counts[m - 1] = static_cast<uint32_t>(n - prefix);
    visit(static_cast<const Histogram&>(h));
    std::size_t i = m - 1;
    for (;;) {
      --i;
      if (prefix < n) {
        ++h.counts[i];
        ++prefix;
        break;
      }
      prefix -= h.counts[i];
      h.counts[i] = 0;
      if (i == 0) return;
    }
  }
}

}  // namespace sdht
