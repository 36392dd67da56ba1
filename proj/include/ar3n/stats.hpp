#pragma once

#include <span>

namespace ar3n {

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quartiles use linear interpolation between order statistics.
Summary summarize(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with df degrees of freedom (df may be
/// fractional).
double student_t_two_sided_p(double t, double df);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Unequal-variance two-sample t-test with Welch-Satterthwaite df. Throws
/// ar3n::Error when either sample has fewer than two values or both variances
/// are zero.
TTest welch_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace ar3n
