#include "sdht/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sdht {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kWitnessTol = 1e-10;
constexpr double kInteriorMargin = 1e-6;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> diff(const FiniteDistribution& a,
                         const FiniteDistribution& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double max_abs_diff(const FiniteDistribution& a, const FiniteDistribution& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

Channel::Channel(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) {
    throw dimension_error("Channel: no input symbols");
  }
  std::size_t out = rows_.front().size();
  if (out == 0) {
    throw dimension_error("Channel: no output symbols");
  }
  for (const auto& row : rows_) {
    if (row.size() != out) {
      throw dimension_error("Channel: ragged rows");
    }
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || p > 1.0) {
        throw precondition_error("Channel: entry outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kMassTol) {
      throw precondition_error("Channel: row mass " + std::to_string(sum));
    }
  }
}

Channel Channel::identity(std::size_t m) {
  std::vector<std::vector<double>> rows(m, std::vector<double>(m, 0.0));
  for (std::size_t x = 0; x < m; ++x) rows[x][x] = 1.0;
  return Channel(std::move(rows));
}

FiniteDistribution push_forward(const Channel& w,
                                const FiniteDistribution& mu) {
  if (w.input_size() != mu.size()) {
    throw dimension_error("push_forward: input alphabet mismatch");
  }
  std::vector<double> out(w.output_size(), 0.0);
  for (std::size_t x = 0; x < w.input_size(); ++x) {
    if (mu[x] == 0.0) continue;
    for (std::size_t y = 0; y < out.size(); ++y) {
      out[y] += mu[x] * w.prob(y, x);
    }
  }
  // Guard the 1e-12 mass check against accumulated rounding.
  double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& p : out) p /= sum;
  return FiniteDistribution(std::move(out));
}

Channel compose(const Channel& w, const Channel& r) {
  if (w.input_size() != r.output_size()) {
    throw dimension_error("compose: inner alphabet mismatch");
  }
  std::vector<std::vector<double>> rows(
      r.input_size(), std::vector<double>(w.output_size(), 0.0));
  for (std::size_t u = 0; u < r.input_size(); ++u) {
    for (std::size_t x = 0; x < r.output_size(); ++x) {
      double rx = r.prob(x, u);
      if (rx == 0.0) continue;
      for (std::size_t y = 0; y < w.output_size(); ++y) {
        rows[u][y] += rx * w.prob(y, x);
      }
    }
  }
  return Channel(std::move(rows));
}

std::optional<CollinearityWitness> collinearity_check(
    const FiniteDistribution& mu0, const FiniteDistribution& mu1,
    const FiniteDistribution& mu2) {
  if (mu0.size() != mu1.size() || mu0.size() != mu2.size()) {
    throw dimension_error("collinearity_check: alphabet mismatch");
  }
  const FiniteDistribution* mus[3] = {&mu0, &mu1, &mu2};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      if (max_abs_diff(*mus[i], *mus[j]) <= kMassTol) {
        std::size_t k = 3 - i - j;
        CollinearityWitness w;
        w.theta = 1.0;
        w.a = i;
        w.b = k;
        w.c = j;
        w.degenerate = true;
        return w;
      }
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t a = (c == 0) ? 1 : 0;
    std::size_t b = (c == 2) ? 1 : 2;
    std::vector<double> d = diff(*mus[a], *mus[b]);
    std::vector<double> e = diff(*mus[c], *mus[b]);
    double denom = dot(d, d);
    double theta = dot(d, e) / denom;
    if (theta < -kMassTol || theta > 1.0 + kMassTol) continue;
    theta = std::clamp(theta, 0.0, 1.0);
    double residual = 0.0;
    for (std::size_t x = 0; x < d.size(); ++x) {
      double lhs = theta * (*mus[a])[x] + (1.0 - theta) * (*mus[b])[x];
      residual = std::max(residual, std::abs(lhs - (*mus[c])[x]));
    }
    if (residual <= kWitnessTol) {
      CollinearityWitness w;
      w.theta = theta;
      w.a = a;
      w.b = b;
      w.c = c;
      w.degenerate = false;
      return w;
    }
  }
  return std::nullopt;
}

Channel separating_channel(const FiniteDistribution& mu0,
                           const FiniteDistribution& mu1,
                           const FiniteDistribution& mu2) {
  if (auto witness = collinearity_check(mu0, mu1, mu2)) {
    throw construction_error(
        "separating_channel: inputs are collinear (theta=" +
        std::to_string(witness->theta) + "), no separating channel exists");
  }
  std::vector<double> u1 = diff(mu1, mu0);
  std::vector<double> u2 = diff(mu2, mu0);
  double coeff = dot(u2, u1) / dot(u1, u1);
  std::vector<double> v(u1.size());
  for (std::size_t x = 0; x < v.size(); ++x) v[x] = u2[x] - coeff * u1[x];
  if (dot(v, u2) <= 0.0) {
    throw construction_error("separating_channel: projection degenerated");
  }
  double alpha = std::numeric_limits<double>::infinity();
  for (double vx : v) {
    if (vx != 0.0) {
      alpha = std::min(alpha, (0.5 - kInteriorMargin) / std::abs(vx));
    }
  }
  std::vector<std::vector<double>> rows(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) {
    double one = 0.5 + alpha * v[x];
    rows[x] = {1.0 - one, one};
  }
  return Channel(std::move(rows));
}

Channel sign_channel(const FiniteDistribution& mu0,
                     const FiniteDistribution& mu1) {
  if (mu0.size() != mu1.size()) {
    throw dimension_error("sign_channel: alphabet mismatch");
  }
  if (max_abs_diff(mu0, mu1) == 0.0) {
    throw precondition_error("sign_channel: inputs are identical");
  }
  std::vector<std::vector<double>> rows(mu0.size());
  for (std::size_t x = 0; x < mu0.size(); ++x) {
    bool one = mu0[x] > mu1[x];
    rows[x] = {one ? 0.0 : 1.0, one ? 1.0 : 0.0};
  }
  return Channel(std::move(rows));
}

SymmetrizerResult bernoulli_symmetrizer(double p0, double p1, double p2) {
  for (double t : {p0, p1, p2}) {
    if (!(t >= 0.0) || t > 1.0) {
      throw precondition_error("bernoulli_symmetrizer: parameter outside [0,1]");
    }
  }
  if (p0 == p1) {
    throw precondition_error(
        "bernoulli_symmetrizer: degenerate class pair p0 = p1");
  }
  if (p2 == p0 || p2 == p1) {
    throw precondition_error(
        "bernoulli_symmetrizer: alternative p2 coincides with a class");
  }
  double s = p0 + p1;
  double m = std::min(1.0 / s, 1.0 / (2.0 - s));
  double k = (1.0 - m * s) / 2.0;
  if (k < 0.0) k = 0.0;
  double top = m + k;
  double bottom = 1.0 - m - k;
  if (top > 1.0 || bottom < 0.0) {
    // Exact values are 1 and 0 whenever s <= 1; rounding can land an ulp
    // outside and the Channel constructor rejects that.
    top = 1.0;
    bottom = 0.0;
  }
  Channel channel({{k, 1.0 - k}, {top, bottom}});
  double p = k + m * p0;
  double q = k + m * p2;
  return SymmetrizerResult{std::move(channel), p, q};
}

Channel merge_symbols(const Channel& w, std::size_t i, std::size_t j) {
  std::size_t out = w.output_size();
  if (i >= out || j >= out || i == j) {
    throw dimension_error("merge_symbols: invalid output symbol pair");
  }
  std::size_t keep = std::min(i, j), drop = std::max(i, j);
  std::vector<std::vector<double>> rows(w.input_size());
  for (std::size_t x = 0; x < w.input_size(); ++x) {
    std::vector<double> row;
    row.reserve(out - 1);
    for (std::size_t y = 0; y < out; ++y) {
      if (y == drop) continue;
      double p = w.prob(y, x);
      if (y == keep) p += w.prob(drop, x);
      row.push_back(p);
    }
    rows[x] = std::move(row);
  }
  return Channel(std::move(rows));
}

std::vector<double> likelihood_ratios(const Channel& w) {
  if (w.input_size() != 2) {
    throw dimension_error("likelihood_ratios: channel must have binary input");
  }
  std::vector<double> r(w.output_size());
  for (std::size_t y = 0; y < r.size(); ++y) {
    double num = w.prob(y, 0), den = w.prob(y, 1);
    r[y] = den == 0.0 ? std::numeric_limits<double>::infinity() : num / den;
  }
  return r;
}

Channel sort_outputs_by_ratio(const Channel& w) {
  std::vector<double> r = likelihood_ratios(w);
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
  std::vector<std::vector<double>> rows(2, std::vector<double>(r.size()));
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < r.size(); ++y) {
      rows[x][y] = w.prob(order[y], x);
    }
  }
  return Channel(std::move(rows));
}

Channel gamma_transform(const Channel& w, double gamma) {
  if (!(gamma >= 0.0) || gamma > 1.0) {
    throw precondition_error("gamma_transform: gamma outside [0, 1]");
  }
  std::vector<double> r = likelihood_ratios(w);
  for (std::size_t y = 0; y + 1 < r.size(); ++y) {
    if (r[y] > r[y + 1]) {
      throw precondition_error(
          "gamma_transform: output symbols not sorted by likelihood ratio; "
          "apply sort_outputs_by_ratio first");
    }
  }
  std::vector<std::vector<double>> rows(2, std::vector<double>(r.size()));
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < r.size(); ++y) {
      double scaled = (1.0 - gamma) * w.prob(y, x);
      rows[x][y] = (y == 0) ? scaled + gamma : scaled;
    }
  }
  return Channel(std::move(rows));
}

double gamma_star(double a0, double a1, double b0, double b1) {
  if (!(a1 > 0.0) || !(b1 > 0.0)) {
    throw precondition_error("gamma_star: denominators must be positive");
  }
  if (a0 < 0.0 || b0 < 0.0) {
    throw precondition_error("gamma_star: negative numerator");
  }
  double ra = a0 / a1, rb = b0 / b1;
  if (rb > 1.0) {
    throw precondition_error("gamma_star: target ratio exceeds 1");
  }
  if (ra > rb) {
    throw precondition_error(
        "gamma_star: ratios out of order (a0/a1 must not exceed b0/b1)");
  }
  if (ra == rb) return 0.0;
  double n = a1 * b0 - a0 * b1;
  double m = b1 - b0;
  return n / (m + n);
}

}  // namespace sdht
