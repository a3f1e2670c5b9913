#include "sdht/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdht {

namespace {

constexpr double kAuditSlack = 1e-9;

void check_theta(double theta, const char* op) {
  if (!(theta > 0.0) || !(theta < 1.0)) {
    throw precondition_error(std::string(op) +
                             ": theta must lie strictly inside (0, 1)");
  }
}

}  // namespace

RatioInstance make_ratio_instance(double theta, double a, double c) {
  check_theta(theta, "make_ratio_instance");
  if (!(a >= 0.0) || !(c > 0.0) || a + c > 1.0) {
    throw precondition_error(
        "make_ratio_instance: need 0 <= a, 0 < c, a + c <= 1");
  }
  RatioInstance inst;
  inst.theta = theta;
  inst.a = a;
  inst.c = c;
  inst.c_prime = (1.0 - theta) * c;
  inst.k = 1.0 / (1.0 - theta);
  return inst;
}

double bernoulli_hellinger_sq(double u, double v) {
  auto dq = [](double x, double y) {
    if (x == y) return 0.0;
    return (x - y) / (std::sqrt(x) + std::sqrt(y));
  };
  double d1 = dq(u, v);
  double d0 = dq(1.0 - u, 1.0 - v);
  return d1 * d1 + d0 * d0;
}

double hellinger_ratio(const RatioInstance& inst) {
  double num = bernoulli_hellinger_sq(inst.a, inst.a + inst.c_prime);
  double den =
      bernoulli_hellinger_sq(inst.a + inst.c_prime, inst.a + inst.c);
  return num / den;
}

double boundary_ratio(double theta, double c) {
  check_theta(theta, "boundary_ratio");
  if (!(c > 0.0) || c > 1.0) {
    throw precondition_error("boundary_ratio: c must lie in (0, 1]");
  }
  double value = hellinger_ratio(make_ratio_instance(theta, 1.0 - c, c));
  double cap = 1.0 + 2.0 * (1.0 - std::sqrt(theta)) / theta;
  if (value > cap + kAuditSlack) {
    throw audit_error("boundary_ratio: value " + std::to_string(value) +
                      " exceeds the certified cap " + std::to_string(cap));
  }
  return value;
}

double hellinger_ratio_at_zero(double c, double theta) {
  check_theta(theta, "hellinger_ratio_at_zero");
  if (!(c > 0.0) || !(c < 1.0)) {
    throw precondition_error("hellinger_ratio_at_zero: c must lie in (0, 1)");
  }
  double k = 1.0 / (1.0 - theta);
  double rk = std::sqrt(k);
  return (rk - c + std::sqrt((1.0 - c) * (k - c))) /
         ((rk + std::sqrt(k - c)) * (rk - 1.0) * (rk - 1.0));
}

double ratio_limit(double theta) {
  check_theta(theta, "ratio_limit");
  double rk = std::sqrt(1.0 / (1.0 - theta));
  return 1.0 / ((rk - 1.0) * (rk - 1.0));
}

QuotientIdentity hellinger_quotient_identity(double p, double q) {
  if (!(p > 0.0) || !(p < 1.0) || !(q > 0.0) || !(q < 1.0)) {
    throw precondition_error(
        "hellinger_quotient_identity: p, q must lie in (0, 1)");
  }
  double a = std::sqrt(p * q);
  double b = std::sqrt((1.0 - p) * (1.0 - q));
  QuotientIdentity out;
  out.rhs = (a - b) * (1.0 + a + b) / (2.0 * a * b);
  if (p == q) {
    // Raw form is 0/0 at p=q; the factored form alone is meaningful.
    out.raw_indeterminate = true;
    out.lhs = out.rhs;
    out.gap = 0.0;
    return out;
  }
  double num = -(p + q) / (2.0 * a) + (2.0 - p - q) / (2.0 * b);
  double den = 1.0 - a - b;
  out.lhs = num / den;
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

double transform_growth_kernel(double t, double theta) {
  check_theta(theta, "transform_growth_kernel");
  if (!(t > 0.0)) {
    throw precondition_error("transform_growth_kernel: t must be positive");
  }
  double s = theta + (1.0 - theta) * t;
  double base = ((1.0 - theta) / theta) *
                ((std::sqrt(t) + std::sqrt(s)) / (1.0 + std::sqrt(s)));
  return base * base;
}

SupRatioResult sup_ratio_binary(double theta, std::size_t grid_resolution) {
  check_theta(theta, "sup_ratio_binary");
  if (grid_resolution < 100) {
    throw precondition_error(
        "sup_ratio_binary: grid resolution must be at least 100");
  }
  SupRatioResult best;
  best.max_value = -1.0;
  auto consider = [&](double a, double c) {
    if (!(c > 0.0) || a < 0.0 || a + c > 1.0) return;
    RatioInstance inst = make_ratio_instance(theta, a, c);
    double value = hellinger_ratio(inst);
    if (value > best.max_value) {
      best.max_value = value;
      best.argmax = inst;
    }
  };
  double step = 1.0 / static_cast<double>(grid_resolution);
  for (std::size_t i = 0; i < grid_resolution; ++i) {
    double a = static_cast<double>(i) * step;
    for (std::size_t j = 1; j + i <= grid_resolution; ++j) {
      consider(a, static_cast<double>(j) * step);
    }
  }
  // Log-refined corner: the supremum is approached as (a, c) -> (0, 0).
  double log_lo = std::log(1e-12), log_hi = std::log(step);
  for (std::size_t j = 0; j < grid_resolution; ++j) {
    double f = static_cast<double>(j) / static_cast<double>(grid_resolution - 1);
    double c = std::exp(log_lo + f * (log_hi - log_lo));
    consider(0.0, c);
    consider(c, c);
  }
  double cap = ratio_limit(theta);
  if (best.max_value > cap + kAuditSlack) {
    throw audit_error("sup_ratio_binary: grid max " +
                      std::to_string(best.max_value) +
                      " exceeds the certified limit " + std::to_string(cap));
  }
  return best;
}

double ratio_floor(double theta, std::size_t grid_resolution) {
  SupRatioResult certification = sup_ratio_binary(theta, grid_resolution);
  double cap = ratio_limit(theta);
  if (certification.max_value < 0.95 * cap) {
    throw audit_error(
        "ratio_floor: grid certification fell short of the closed-form "
        "limit; max " +
        std::to_string(certification.max_value) + " vs " + std::to_string(cap));
  }
  return 1.0 / cap;
}

double general_channel_ratio(const Channel& w, double theta) {
  check_theta(theta, "general_channel_ratio");
  if (w.input_size() != 2) {
    throw dimension_error("general_channel_ratio: channel must be binary-input");
  }
  bool distinct = false;
  for (std::size_t y = 0; y < w.output_size(); ++y) {
    if (w.prob(y, 0) != w.prob(y, 1)) {
      distinct = true;
      break;
    }
  }
  if (!distinct) {
    throw precondition_error(
        "general_channel_ratio: identical rows are excluded");
  }
  FiniteDistribution p0 = w.row_distribution(0);
  FiniteDistribution p2 = w.row_distribution(1);
  FiniteDistribution p1 = push_forward(w, FiniteDistribution::bernoulli(theta));
  return hellinger_sq(p1, p2) / hellinger_sq(p0, p1);
}

ReductionResult reduce_to_binary(const Channel& w, double theta) {
  check_theta(theta, "reduce_to_binary");
  if (w.input_size() != 2) {
    throw dimension_error("reduce_to_binary: channel must be binary-input");
  }
  if (w.output_size() < 2) {
    throw precondition_error("reduce_to_binary: need at least two outputs");
  }
  auto excess = [](const Channel& ch) {
    std::vector<double> r = likelihood_ratios(ch);
    return std::count_if(r.begin(), r.end(),
                         [](double v) { return v > 1.0; });
  };
  Channel current = w;
  bool flipped = false;
  if (excess(current) > 1) {
    Channel swapped({w.row(1), w.row(0)});
    if (excess(swapped) > 1) {
      throw construction_error(
          "reduce_to_binary: no input labeling leaves at most one likelihood "
          "ratio above 1; single-frame reduction does not apply");
    }
    current = std::move(swapped);
    flipped = true;
  }
  ReductionResult result{sort_outputs_by_ratio(current), {}, flipped};
  result.trace.push_back(general_channel_ratio(result.channel, theta));
  while (result.channel.output_size() > 2) {
    const Channel& ch = result.channel;
    double gamma = gamma_star(ch.prob(0, 0), ch.prob(0, 1), ch.prob(1, 0),
                              ch.prob(1, 1));
    if (gamma >= 1.0) {
      // Happens only when the second column's likelihood ratio is exactly 1:
      // the transform would send all mass to one output.
      throw construction_error(
          "reduce_to_binary: unit likelihood ratio column degenerates the "
          "transform");
    }
    Channel merged = merge_symbols(gamma_transform(ch, gamma), 0, 1);
    result.channel = sort_outputs_by_ratio(merged);
    result.trace.push_back(general_channel_ratio(result.channel, theta));
    if (result.trace.back() + kAuditSlack <
        result.trace[result.trace.size() - 2]) {
      throw audit_error("reduce_to_binary: ratio trace decreased at step " +
                        std::to_string(result.trace.size() - 1));
    }
  }
  if (result.trace.back() + kAuditSlack < result.trace.front()) {
    throw audit_error("reduce_to_binary: final ratio fell below the initial");
  }
  return result;
}

TradeoffRecord tradeoff_audit(const ExchangeableLaw& l0,
                              const ExchangeableLaw& l1,
                              const ExchangeableLaw& l2, double theta) {
  TradeoffRecord record;
  record.lambda = ratio_floor(theta);
  record.bound = 1.0 - std::exp((std::sqrt(3.0) / 2.0 - 1.0) * record.lambda);
  record.tv12 = law_tv(l1, l2);
  record.tv01 = law_tv(l0, l1);
  record.first_disjunct = record.tv12 <= 0.5;
  record.second_disjunct = record.tv01 >= record.bound;
  if (!record.first_disjunct && !record.second_disjunct) {
    throw audit_error(
        "tradeoff_audit: neither disjunct held (tv12=" +
        std::to_string(record.tv12) + ", tv01=" + std::to_string(record.tv01) +
        ", bound=" + std::to_string(record.bound) + ")");
  }
  return record;
}

}  // namespace sdht
