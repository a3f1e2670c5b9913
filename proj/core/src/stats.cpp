#include "sdht/stats.hpp"

#include <cmath>
#include <limits>

#include "sdht/errors.hpp"

namespace sdht {

namespace {

// Lower regularized P(a, x) by power series.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 10000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized Q(a, x) by Lentz's continued fraction.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double f = d;
  for (int k = 1; k < 10000; ++k) {
    double an = -static_cast<double>(k) * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw precondition_error("regularized_gamma_q: need a > 0, x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double k) {
  if (!(k > 0.0)) {
    throw precondition_error("chi_square_sf: degrees of freedom must be > 0");
  }
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * k, 0.5 * x);
}

ChiSquareResult two_sample_chi_square(const std::vector<uint64_t>& counts1,
                                      const std::vector<uint64_t>& counts2) {
  if (counts1.size() != counts2.size()) {
    throw dimension_error("two_sample_chi_square: cell count mismatch");
  }
  double n1 = 0.0, n2 = 0.0;
  for (uint64_t c : counts1) n1 += static_cast<double>(c);
  for (uint64_t c : counts2) n2 += static_cast<double>(c);
  if (n1 == 0.0 || n2 == 0.0) {
    throw precondition_error("two_sample_chi_square: empty sample");
  }
  double total = n1 + n2;
  double stat = 0.0;
  int live_cells = 0;
  for (std::size_t i = 0; i < counts1.size(); ++i) {
    double col = static_cast<double>(counts1[i]) + static_cast<double>(counts2[i]);
    if (col == 0.0) continue;
    ++live_cells;
    double e1 = n1 * col / total;
    double e2 = n2 * col / total;
    double d1 = static_cast<double>(counts1[i]) - e1;
    double d2 = static_cast<double>(counts2[i]) - e2;
    stat += d1 * d1 / e1 + d2 * d2 / e2;
  }
  ChiSquareResult result;
  result.statistic = stat;
  result.dof = static_cast<double>(live_cells > 1 ? live_cells - 1 : 1);
  result.p_value = live_cells > 1 ? chi_square_sf(stat, result.dof) : 1.0;
  return result;
}

LinearFit linear_fit(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw dimension_error("linear_fit: length mismatch");
  }
  if (xs.size() < 2) {
    throw precondition_error("linear_fit: need at least two points");
  }
  double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    throw precondition_error("linear_fit: degenerate abscissae");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace sdht
