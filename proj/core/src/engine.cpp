#include "sdht/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <thread>

#include "sdht/rng.hpp"

namespace sdht {

namespace {

uint64_t ceil_log2(uint64_t x) {
  if (x <= 1) return 0;
  return std::bit_width(x - 1);
}

void check_scheme(const KeyedScheme& scheme) {
  if (scheme.key_count == 0) {
    throw precondition_error("KeyedScheme: key_count must be at least 1");
  }
  if (scheme.n == 0) {
    throw precondition_error("KeyedScheme: n must be at least 1");
  }
  if (!scheme.heterogeneous() &&
      scheme.key_channels.size() != scheme.key_count) {
    throw dimension_error("KeyedScheme: one channel required per key");
  }
  if (scheme.heterogeneous()) {
    if (scheme.client_channels.size() != scheme.n) {
      throw dimension_error("KeyedScheme: one channel list per client");
    }
    std::size_t out = scheme.client_channels.front().front().output_size();
    std::size_t in = scheme.client_channels.front().front().input_size();
    for (const auto& per_key : scheme.client_channels) {
      if (per_key.size() != scheme.key_count) {
        throw dimension_error("KeyedScheme: one channel per key per client");
      }
      for (const auto& w : per_key) {
        // The symmetric detector reads one pooled histogram, so every
        // client/key channel must share the same alphabets.
        if (w.output_size() != out || w.input_size() != in) {
          throw dimension_error("KeyedScheme: client channels disagree on "
                                "alphabets");
        }
      }
    }
  } else {
    std::size_t out = scheme.key_channels.front().output_size();
    std::size_t in = scheme.key_channels.front().input_size();
    for (const auto& w : scheme.key_channels) {
      if (w.output_size() != out || w.input_size() != in) {
        throw dimension_error("KeyedScheme: key channels disagree on alphabets");
      }
    }
  }
}

}  // namespace

uint64_t KeyedScheme::comm_bits() const {
  if (heterogeneous()) {
    uint64_t total = 0;
    for (const auto& per_key : client_channels) {
      total += ceil_log2(per_key.front().output_size());
    }
    return total;
  }
  return static_cast<uint64_t>(n) * ceil_log2(key_channels.front().output_size());
}

uint64_t KeyedScheme::key_bits() const { return ceil_log2(key_count); }

Detector constant_detector(int bit) {
  Detector d;
  d.name = "constant";
  d.params = {static_cast<double>(bit)};
  d.decide = [bit](const Histogram&) { return bit; };
  return d;
}

Detector lrt_detector(const FiniteDistribution& p0,
                      const FiniteDistribution& p1) {
  if (p0.size() != p1.size()) {
    throw dimension_error("lrt_detector: alphabet mismatch");
  }
  Detector d;
  d.name = "lrt";
  d.params.push_back(static_cast<double>(p0.size()));
  d.params.insert(d.params.end(), p0.probs().begin(), p0.probs().end());
  d.params.insert(d.params.end(), p1.probs().begin(), p1.probs().end());
  d.decide = [p0, p1](const Histogram& h) {
    return log_sequence_prob(p1, h) > log_sequence_prob(p0, h) ? 1 : 0;
  };
  return d;
}

Detector nearest_frequency_detector(double p, double q) {
  Detector d;
  d.name = "nearest-frequency";
  d.params = {p, q};
  d.decide = [p, q](const Histogram& h) {
    if (h.counts.size() != 2) {
      throw dimension_error("nearest-frequency detector needs binary outputs");
    }
    double freq = h.n == 0 ? 0.0
                           : static_cast<double>(h.counts[1]) /
                                 static_cast<double>(h.n);
    double d0 = std::min(std::abs(freq - p), std::abs(freq - (1.0 - p)));
    double d1 = std::min(std::abs(freq - q), std::abs(freq - (1.0 - q)));
    return d0 <= d1 ? 0 : 1;
  };
  return d;
}

Detector threshold_count_detector(std::size_t symbol, double threshold) {
  Detector d;
  d.name = "threshold-count";
  d.params = {static_cast<double>(symbol), threshold};
  d.decide = [symbol, threshold](const Histogram& h) {
    if (symbol >= h.counts.size()) {
      throw dimension_error("threshold-count detector: symbol out of range");
    }
    return static_cast<double>(h.counts[symbol]) >= threshold ? 1 : 0;
  };
  return d;
}

Detector make_detector(const std::string& name,
                       const std::vector<double>& params) {
  if (name == "constant") {
    if (params.size() != 1) {
      throw precondition_error("constant detector takes one parameter");
    }
    return constant_detector(params[0] != 0.0 ? 1 : 0);
  }
  if (name == "nearest-frequency") {
    if (params.size() != 2) {
      throw precondition_error("nearest-frequency detector takes p and q");
    }
    return nearest_frequency_detector(params[0], params[1]);
  }
  if (name == "threshold-count") {
    if (params.size() != 2) {
      throw precondition_error(
          "threshold-count detector takes symbol and threshold");
    }
    return threshold_count_detector(static_cast<std::size_t>(params[0]),
                                    params[1]);
  }
  if (name == "lrt") {
    if (params.size() < 3) {
      throw precondition_error("lrt detector parameters truncated");
    }
    std::size_t m = static_cast<std::size_t>(params[0]);
    if (params.size() != 1 + 2 * m) {
      throw precondition_error("lrt detector parameters truncated");
    }
    std::vector<double> v0(params.begin() + 1, params.begin() + 1 + m);
    std::vector<double> v1(params.begin() + 1 + m, params.end());
    return lrt_detector(FiniteDistribution(std::move(v0)),
                        FiniteDistribution(std::move(v1)));
  }
  throw precondition_error("unknown detector name: " + name);
}

ExchangeableLaw message_law(const KeyedScheme& scheme,
                            const FiniteDistribution& mu) {
  check_scheme(scheme);
  if (scheme.heterogeneous()) {
    throw precondition_error(
        "message_law: per-client channels require the Monte Carlo path");
  }
  double w = 1.0 / static_cast<double>(scheme.key_count);
  std::vector<ExchangeableLaw::Component> components;
  components.reserve(scheme.key_count);
  for (uint64_t k = 0; k < scheme.key_count; ++k) {
    components.emplace_back(w, push_forward(scheme.key_channels[k], mu));
  }
  return ExchangeableLaw(scheme.n, std::move(components));
}

double correctness_error(const KeyedScheme& scheme,
                         const std::vector<FiniteDistribution>& h0,
                         const std::vector<FiniteDistribution>& h1) {
  check_scheme(scheme);
  double worst = 0.0;
  for (int b = 0; b < 2; ++b) {
    const auto& members = b == 0 ? h0 : h1;
    for (const auto& mu : members) {
      ExchangeableLaw law = message_law(scheme, mu);
      double err = symmetric_event_prob(law, [&](const Histogram& h) {
        return scheme.detector.decide(h) != b;
      });
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double privacy_delta(const KeyedScheme& scheme,
                     const std::vector<FiniteDistribution>& h) {
  check_scheme(scheme);
  if (h.empty()) {
    throw precondition_error("privacy_delta: empty hypothesis class");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      worst = std::max(
          worst, law_tv(message_law(scheme, h[i]), message_law(scheme, h[j])));
    }
  }
  return worst;
}

EvaluationReport evaluate(const KeyedScheme& scheme,
                          const std::vector<FiniteDistribution>& h0,
                          const std::vector<FiniteDistribution>& h1) {
  EvaluationReport report;
  report.epsilon = correctness_error(scheme, h0, h1);
  report.delta = std::max(privacy_delta(scheme, h0), privacy_delta(scheme, h1));
  report.comm_bits = scheme.comm_bits();
  report.key_bits = scheme.key_bits();
  report.method = "exact";
  return report;
}

namespace {

struct MemberStats {
  uint64_t errors = 0;
  std::map<std::vector<uint32_t>, uint64_t> histogram_counts;
};

void run_member_trials(const KeyedScheme& scheme, const FiniteDistribution& mu,
                       int label, uint64_t member_index, uint64_t trials,
                       uint64_t first, uint64_t last, uint64_t seed,
                       MemberStats& stats) {
  std::size_t m = scheme.channel_of(0, 0).output_size();
  Histogram h;
  for (uint64_t t = first; t < last; ++t) {
    CounterRng rng(seed, member_index * trials + t);
    uint64_t key = rng.below(scheme.key_count);
    h.counts.assign(m, 0);
    h.n = scheme.n;
    for (uint32_t i = 0; i < scheme.n; ++i) {
      const Channel& w = scheme.channel_of(i, key);
      std::size_t x = rng.sample(mu.probs());
      std::size_t y = rng.sample(w.row(x));
      ++h.counts[y];
    }
    if (scheme.detector.decide(h) != label) ++stats.errors;
    ++stats.histogram_counts[h.counts];
  }
}

}  // namespace

EvaluationReport monte_carlo_evaluate(const KeyedScheme& scheme,
                                      const std::vector<FiniteDistribution>& h0,
                                      const std::vector<FiniteDistribution>& h1,
                                      uint64_t trials, uint64_t seed,
                                      unsigned threads) {
  check_scheme(scheme);
  if (trials == 0) {
    throw precondition_error("monte_carlo_evaluate: trials must be at least 1");
  }
  if (threads == 0) threads = 1;

  struct Member {
    const FiniteDistribution* mu;
    int label;
  };
  std::vector<Member> members;
  for (const auto& mu : h0) members.push_back({&mu, 0});
  for (const auto& mu : h1) members.push_back({&mu, 1});
  if (members.empty()) {
    throw precondition_error("monte_carlo_evaluate: empty hypothesis classes");
  }

  std::vector<MemberStats> stats(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    unsigned workers =
        static_cast<unsigned>(std::min<uint64_t>(threads, trials));
    std::vector<MemberStats> partial(workers);
    std::vector<std::thread> pool;
    uint64_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      uint64_t first = w * chunk;
      uint64_t last = std::min(trials, first + chunk);
      if (first >= last) break;
      pool.emplace_back(run_member_trials, std::cref(scheme),
                        std::cref(*members[j].mu), members[j].label,
                        static_cast<uint64_t>(j), trials, first, last, seed,
                        std::ref(partial[w]));
    }
    for (auto& th : pool) th.join();
    for (const auto& p : partial) {
      stats[j].errors += p.errors;
      for (const auto& [counts, c] : p.histogram_counts) {
        stats[j].histogram_counts[counts] += c;
      }
    }
  }

  EvaluationReport report;
  report.method = "monte_carlo";
  report.trials = trials;
  report.seed = seed;
  report.comm_bits = scheme.comm_bits();
  report.key_bits = scheme.key_bits();

  double worst_eps = 0.0;
  for (const auto& s : stats) {
    worst_eps = std::max(worst_eps, static_cast<double>(s.errors) /
                                        static_cast<double>(trials));
  }
  report.epsilon = worst_eps;
  report.epsilon_stderr = std::sqrt(worst_eps * (1.0 - worst_eps) /
                                    static_cast<double>(trials));

  // Empirical TV between realized histogram laws, per unordered within-class
  // pair.
  double worst_delta = 0.0;
  std::size_t offset0 = 0, count0 = h0.size();
  for (int b = 0; b < 2; ++b) {
    std::size_t begin = b == 0 ? offset0 : count0;
    std::size_t end = b == 0 ? count0 : members.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < end; ++j) {
        double sum = 0.0;
        const auto& a = stats[i].histogram_counts;
        const auto& c = stats[j].histogram_counts;
        for (const auto& [key, va] : a) {
          auto it = c.find(key);
          uint64_t vb = it == c.end() ? 0 : it->second;
          sum += std::abs(static_cast<double>(va) - static_cast<double>(vb));
        }
        for (const auto& [key, vb] : c) {
          if (a.find(key) == a.end()) sum += static_cast<double>(vb);
        }
        worst_delta =
            std::max(worst_delta, 0.5 * sum / static_cast<double>(trials));
      }
    }
  }
  report.delta = worst_delta;
  if (h0.size() > 1 || h1.size() > 1) {
    report.warnings.push_back(
        "delta is an empirical plug-in TV between realized histogram laws; "
        "it is biased upward at finite trial counts");
  }
  if (trials == 1) {
    report.warnings.push_back("single-trial estimate is degenerate");
  }
  return report;
}

KeyedScheme build_separating_scheme(const Channel& w,
                                    const std::vector<FiniteDistribution>& h0,
                                    const std::vector<FiniteDistribution>& h1,
                                    uint32_t n) {
  if (h0.empty() || h1.empty()) {
    throw precondition_error("build_separating_scheme: empty class");
  }
  if (n == 0) {
    throw precondition_error("build_separating_scheme: n must be at least 1");
  }
  constexpr double kCollapseTol = 1e-10;
  FiniteDistribution p0 = push_forward(w, h0.front());
  FiniteDistribution p1 = push_forward(w, h1.front());
  auto max_diff = [](const FiniteDistribution& a, const FiniteDistribution& b) {
    double m = 0.0;
    for (std::size_t y = 0; y < a.size(); ++y) {
      m = std::max(m, std::abs(a[y] - b[y]));
    }
    return m;
  };
  for (const auto& mu : h0) {
    if (max_diff(push_forward(w, mu), p0) > kCollapseTol) {
      throw construction_error(
          "build_separating_scheme: channel does not collapse class 0");
    }
  }
  for (const auto& mu : h1) {
    if (max_diff(push_forward(w, mu), p1) > kCollapseTol) {
      throw construction_error(
          "build_separating_scheme: channel does not collapse class 1");
    }
  }
  if (max_diff(p0, p1) <= kCollapseTol) {
    throw construction_error(
        "build_separating_scheme: the two class outputs coincide");
  }
  KeyedScheme scheme;
  scheme.key_count = 1;
  scheme.key_channels = {w};
  scheme.detector = lrt_detector(p0, p1);
  scheme.n = n;
  return scheme;
}

KeyedScheme build_one_bit_scheme(const FiniteDistribution& mu0,
                                 const FiniteDistribution& mu1,
                                 const FiniteDistribution& mu2, uint32_t n) {
  auto equal = [](const FiniteDistribution& a, const FiniteDistribution& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t x = 0; x < a.size(); ++x) {
      if (a[x] != b[x]) return false;
    }
    return true;
  };
  if (equal(mu0, mu1) || equal(mu0, mu2) || equal(mu1, mu2)) {
    throw precondition_error(
        "build_one_bit_scheme: inputs must be pairwise distinct");
  }
  if (!collinearity_check(mu0, mu1, mu2)) {
    Channel w = separating_channel(mu0, mu1, mu2);
    return build_separating_scheme(w, {mu0, mu1}, {mu2}, n);
  }
  Channel s = sign_channel(mu0, mu1);
  double t0 = push_forward(s, mu0)[1];
  double t1 = push_forward(s, mu1)[1];
  double t2 = push_forward(s, mu2)[1];
  SymmetrizerResult sym = bernoulli_symmetrizer(t0, t1, t2);
  Channel base = compose(sym.channel, s);
  Channel flip({{0.0, 1.0}, {1.0, 0.0}});
  KeyedScheme scheme;
  scheme.key_count = 2;
  scheme.key_channels = {base, compose(flip, base)};
  scheme.detector = nearest_frequency_detector(sym.p, sym.q);
  scheme.n = n;
  return scheme;
}

int detect_with_resampling(const Detector& detector,
                           const FiniteDistribution& resample_marginal,
                           double theta,
                           const std::vector<std::size_t>& messages,
                           uint64_t seed) {
  if (!(theta > 0.0) || !(theta < 1.0)) {
    throw precondition_error("detect_with_resampling: theta must be in (0,1)");
  }
  std::size_t m = resample_marginal.size();
  Histogram h;
  h.counts.assign(m, 0);
  h.n = static_cast<uint32_t>(messages.size());
  CounterRng rng(seed);
  for (std::size_t symbol : messages) {
    if (symbol >= m) {
      throw dimension_error("detect_with_resampling: message symbol range");
    }
    bool keep = rng.unit() < theta;
    std::size_t z = keep ? symbol : rng.sample(resample_marginal.probs());
    ++h.counts[z];
  }
  return detector.decide(h);
}

}  // namespace sdht
