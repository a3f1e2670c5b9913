#pragma once

#include <cstdint>
#include <vector>

#include "sdht/channel.hpp"
#include "sdht/prob.hpp"

namespace sdht {

// Parameters of the two-Hellinger-ratio functional for binary channels under
// the collinear input triple Ber(0), Ber(theta), Ber(1): a and a+c are the
// channel's two row masses on one output symbol, c_prime = (1-theta)*c.
struct RatioInstance {
  double theta = 0.0;
  double a = 0.0;
  double c = 0.0;
  double c_prime = 0.0;
  double k = 0.0;  // 1/(1-theta)
};

// Validates 0 <= a, 0 < c, a+c <= 1, theta in (0,1) and fills the derived
// fields.
RatioInstance make_ratio_instance(double theta, double a, double c);

// Squared Hellinger distance between Ber(u) and Ber(v) through the
// cancellation-free difference-quotient form; exact to relative rounding even
// for |u-v| near zero.
double bernoulli_hellinger_sq(double u, double v);

// H^2(Ber(a), Ber(a+c')) / H^2(Ber(a+c'), Ber(a+c)).
double hellinger_ratio(const RatioInstance& inst);

// The a+c=1 boundary branch of the ratio; checks the certified cap
// 1 + 2(1-sqrt(theta))/theta and throws audit_error past it.
double boundary_ratio(double theta, double c);

// Closed form of the ratio at a=0 with k=1/(1-theta):
// (sqrt(k) - c + sqrt((1-c)(k-c))) / ((sqrt(k)+sqrt(k-c)) (sqrt(k)-1)^2).
double hellinger_ratio_at_zero(double c, double theta);

// lim of the a=0 ratio as c drops to 0: 1/(sqrt(k)-1)^2.
double ratio_limit(double theta);

struct QuotientIdentity {
  double lhs = 0.0;  // raw quotient form
  double rhs = 0.0;  // factored form (A-B)(1+A+B)/(2AB)
  double gap = 0.0;
  bool raw_indeterminate = false;  // p=q makes the raw form 0/0
};

// Cross-checks the two printed forms of the Hellinger-derivative quotient at
// (p, q); with A=sqrt(pq), B=sqrt((1-p)(1-q)).
QuotientIdentity hellinger_quotient_identity(double p, double q);

// Growth kernel of the gamma-transform ratio trace, evaluated through its
// continuous extension at t=1: ((1-theta)/theta)^2 ((sqrt t + sqrt s)/(1+sqrt s))^2
// with s = theta + (1-theta) t. The (1-t) factors cancel analytically, so no
// limit special-casing is needed.
double transform_growth_kernel(double t, double theta);

struct SupRatioResult {
  double max_value = 0.0;
  RatioInstance argmax;
};

// Grid certification of the two-ratio supremum over admissible (a, c),
// including a log-refined corner near (0,0) and the a+c=1 boundary; throws
// audit_error if the grid max exceeds ratio_limit(theta) + 1e-9.
SupRatioResult sup_ratio_binary(double theta, std::size_t grid_resolution);

// Infimum of the reciprocal ratio orientation: 1/ratio_limit(theta), with the
// grid sup run first as a certification of that closed form.
double ratio_floor(double theta, std::size_t grid_resolution = 400);

// H^2(W o Ber(theta), W o Ber(1)) / H^2(W o Ber(0), W o Ber(theta)) for a
// binary-input channel with distinct rows.
double general_channel_ratio(const Channel& w, double theta);

struct ReductionResult {
  Channel channel;            // binary-output endpoint
  std::vector<double> trace;  // ratio after relabeling and after each merge
  bool input_flipped = false;
};

// Collapses a binary-input channel to two outputs by repeatedly raising the
// lowest likelihood ratio to the second lowest (gamma_star transform) and
// merging the equalized pair. Requires an input labeling with at most one
// ratio above 1 (rows may be swapped to get one); throws construction_error
// when neither labeling qualifies, audit_error if the ratio trace fails to
// grow monotonically.
ReductionResult reduce_to_binary(const Channel& w, double theta);

struct TradeoffRecord {
  double tv12 = 0.0;    // between the theta-mix law and the Ber(1)-end law
  double tv01 = 0.0;    // between the Ber(0)-end law and the theta-mix law
  double lambda = 0.0;  // ratio_floor(theta)
  double bound = 0.0;   // 1 - exp((sqrt(3)/2 - 1) * lambda)
  bool first_disjunct = false;   // tv12 <= 1/2
  bool second_disjunct = false;  // tv01 >= bound
};

// Asserts the correctness/privacy trade-off disjunction on three message
// laws; throws audit_error when neither disjunct holds. The exponent sign
// follows the derivation (negative), so the bound is a small positive number.
TradeoffRecord tradeoff_audit(const ExchangeableLaw& l0,
                              const ExchangeableLaw& l1,
                              const ExchangeableLaw& l2, double theta);

}  // namespace sdht
