#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdht/channel.hpp"
#include "sdht/prob.hpp"

namespace sdht {

// Deterministic symmetric detector: a total function on histograms.
// name/params carry enough to rebuild decide via make_detector, so schemes
// round-trip through JSON.
struct Detector {
  std::string name;
  std::vector<double> params;
  std::function<int(const Histogram&)> decide;
};

Detector constant_detector(int bit);
// Decides 1 iff the histogram is strictly more likely under iid(p1) than
// under iid(p0); ties go to class 0. Compared in the log domain (the
// multinomial coefficient cancels).
Detector lrt_detector(const FiniteDistribution& p0,
                      const FiniteDistribution& p1);
// Binary-alphabet rule: class 0 iff the empirical frequency is at least as
// close to {p, 1-p} as to {q, 1-q}. Invariant under output relabeling.
Detector nearest_frequency_detector(double p, double q);
// Decides 1 iff counts[symbol] >= threshold.
Detector threshold_count_detector(std::size_t symbol, double threshold);
// Rebuilds any of the above from its serialized (name, params) form.
Detector make_detector(const std::string& name,
                       const std::vector<double>& params);

// Per-client keyed scheme: a uniform key selects one channel, applied
// independently by every client; a symmetric detector reads the n outputs.
struct KeyedScheme {
  uint64_t key_count = 1;
  std::vector<Channel> key_channels;  // one channel per key, shared by clients
  // Optional per-client override [client][key]; only the Monte Carlo path
  // accepts it (exact evaluation relies on exchangeability).
  std::vector<std::vector<Channel>> client_channels;
  Detector detector;
  uint32_t n = 0;

  bool heterogeneous() const { return !client_channels.empty(); }
  const Channel& channel_of(std::size_t client, uint64_t key) const {
    return heterogeneous() ? client_channels[client][key] : key_channels[key];
  }
  uint64_t comm_bits() const;  // sum over clients of ceil(log2 |Y_i|)
  uint64_t key_bits() const;   // ceil(log2 key_count)
};

struct EvaluationReport {
  double epsilon = 0.0;
  double delta = 0.0;
  uint64_t comm_bits = 0;
  uint64_t key_bits = 0;
  std::string method;  // "exact" or "monte_carlo"
  std::optional<uint64_t> trials;
  std::optional<uint64_t> seed;
  std::optional<double> epsilon_stderr;
  std::vector<std::string> warnings;
};

// Key-averaged law of the n messages when every client samples from mu.
ExchangeableLaw message_law(const KeyedScheme& scheme,
                            const FiniteDistribution& mu);

// max over b and mu in H_b of P[detector != b], exactly.
double correctness_error(const KeyedScheme& scheme,
                         const std::vector<FiniteDistribution>& h0,
                         const std::vector<FiniteDistribution>& h1);

// max over unordered pairs in H of the TV between their message laws.
double privacy_delta(const KeyedScheme& scheme,
                     const std::vector<FiniteDistribution>& h);

EvaluationReport evaluate(const KeyedScheme& scheme,
                          const std::vector<FiniteDistribution>& h0,
                          const std::vector<FiniteDistribution>& h1);

EvaluationReport monte_carlo_evaluate(const KeyedScheme& scheme,
                                      const std::vector<FiniteDistribution>& h0,
                                      const std::vector<FiniteDistribution>& h1,
                                      uint64_t trials, uint64_t seed,
                                      unsigned threads = 1);

// Keyless scheme for a channel that collapses each class to one output
// distribution; detector is the histogram likelihood-ratio test between the
// two collapsed pushforwards.
KeyedScheme build_separating_scheme(const Channel& w,
                                    const std::vector<FiniteDistribution>& h0,
                                    const std::vector<FiniteDistribution>& h1,
                                    uint32_t n);

// Scheme for H0={mu0,mu1} vs H1={mu2} with at most one shared key bit.
// Non-collinear triples route through separating_channel (keyless); collinear
// triples use sign_channel -> bernoulli_symmetrizer -> XOR-with-key pair and
// the nearest-frequency detector.
KeyedScheme build_one_bit_scheme(const FiniteDistribution& mu0,
                                 const FiniteDistribution& mu1,
                                 const FiniteDistribution& mu2, uint32_t n);

// Randomized detector wrapper: each message survives with probability theta,
// otherwise it is replaced by a fresh draw from resample_marginal; the base
// detector then runs on the blended sequence. Deterministic given seed.
int detect_with_resampling(const Detector& detector,
                           const FiniteDistribution& resample_marginal,
                           double theta,
                           const std::vector<std::size_t>& messages,
                           uint64_t seed);

}  // namespace sdht
