#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sdht/prob.hpp"

namespace sdht {

// Row-stochastic matrix: rows indexed by input symbols, columns by outputs.
class Channel {
 public:
  explicit Channel(std::vector<std::vector<double>> rows);

  static Channel identity(std::size_t m);

  std::size_t input_size() const { return rows_.size(); }
  std::size_t output_size() const { return rows_.front().size(); }

  // W(y|x).
  double prob(std::size_t y, std::size_t x) const { return rows_[x][y]; }
  const std::vector<double>& row(std::size_t x) const { return rows_[x]; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  FiniteDistribution row_distribution(std::size_t x) const {
    return FiniteDistribution(rows_[x]);
  }

 private:
  std::vector<std::vector<double>> rows_;
};

FiniteDistribution push_forward(const Channel& w, const FiniteDistribution& mu);

// (W  after R)(y|u) = sum_x R(x|u) W(y|x).
Channel compose(const Channel& w, const Channel& r);

struct CollinearityWitness {
  double theta = 0.0;
  std::size_t a = 0, b = 0, c = 0;  // theta*mu_a + (1-theta)*mu_b = mu_c
  bool degenerate = false;          // some input pair was equal
};

// Searches for theta in [0,1] and distinct a,b,c with
// theta*mu_a + (1-theta)*mu_b = mu_c entrywise within 1e-10.
std::optional<CollinearityWitness> collinearity_check(
    const FiniteDistribution& mu0, const FiniteDistribution& mu1,
    const FiniteDistribution& mu2);

// Binary-output channel equalizing the pushforwards of mu0 and mu1 while
// separating mu2: W(1|x) = 1/2 + alpha*v_x with v orthogonal to mu1-mu0 and
// alpha the largest scale keeping entries inside [1e-6, 1-1e-6].
// Throws construction_error when the triple is collinear.
Channel separating_channel(const FiniteDistribution& mu0,
                           const FiniteDistribution& mu1,
                           const FiniteDistribution& mu2);

// Deterministic binary-output channel mapping x to 1 iff mu0(x) > mu1(x).
Channel sign_channel(const FiniteDistribution& mu0,
                     const FiniteDistribution& mu1);

struct SymmetrizerResult {
  Channel channel;  // binary input, binary output
  double p;         // f(p0), mass on output symbol 0 under Ber(p0); f(p1) = 1-p
  double q;         // f(p2), guaranteed outside {p, 1-p}
};

// Affine postprocessing f(t) = P(Y=0 | Ber(t)) = k + m*t with the maximal
// positive feasible slope, chosen so that f(p0) + f(p1) = 1.
SymmetrizerResult bernoulli_symmetrizer(double p0, double p1, double p2);

// Sums output columns i and j into position min(i,j); drops max(i,j).
Channel merge_symbols(const Channel& w, std::size_t i, std::size_t j);

// Likelihood ratios W(y|0)/W(y|1) of a binary-input channel; a zero
// denominator sorts as +infinity.
std::vector<double> likelihood_ratios(const Channel& w);

// Permutes output columns so likelihood ratios ascend (ties keep index order).
Channel sort_outputs_by_ratio(const Channel& w);

// On a ratio-sorted binary-input channel: column 0 becomes (1-g)*col + g,
// every other column scales by (1-g). Rows stay stochastic.
Channel gamma_transform(const Channel& w, double gamma);

// The gamma that raises ratio a0/a1 to b0/b1: N/(M+N) with N = a1*b0 - a0*b1,
// M = b1 - b0. Requires a0/a1 <= b0/b1 <= 1 and positive denominators;
// returns 0 on equal ratios.
double gamma_star(double a0, double a1, double b0, double b1);

}  // namespace sdht
