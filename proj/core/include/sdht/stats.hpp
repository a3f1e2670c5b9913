#pragma once

#include <cstdint>
#include <vector>

namespace sdht {

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series expansion below a+1, Lentz continued fraction above.
double regularized_gamma_q(double a, double x);

// P[Chi2_k > x].
double chi_square_sf(double x, double k);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Two-sample homogeneity test on per-cell counts; cells with no mass in
// either sample are dropped.
ChiSquareResult two_sample_chi_square(const std::vector<uint64_t>& counts1,
                                      const std::vector<uint64_t>& counts2);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

LinearFit linear_fit(const std::vector<double>& xs,
                     const std::vector<double>& ys);

}  // namespace sdht
