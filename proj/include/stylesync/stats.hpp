#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "stylesync/error.hpp"

namespace stylesync {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// unbiased sample variance
inline double variance(std::span<const double> xs, double m) {
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double ibeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for a t statistic: survival of |t| under Student's t with the
// given (possibly fractional) degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (t == 0.0) return 1.0;
  double p = ibeta(df / 2.0, 0.5, df / (df + t * t));
  if (p > 1.0) p = 1.0;
  if (p <= 0.0) p = 1e-300;  // keep p in (0, 1] for extreme statistics
  return p;
}

enum class TVariant { Welch, Student };

inline TVariant parse_t_variant(std::string_view s) {
  if (s == "welch") return TVariant::Welch;
  if (s == "student") return TVariant::Student;
  throw Error(ErrorKind::InvalidConfig, "unknown t-test variant '" +
                                            std::string(s) + "'");
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Two-sample t-test, Welch by default. Requires n >= 2 on both sides and a
// nonzero variance in at least one sample.
inline TTestResult t_test(std::span<const double> sample1,
                          std::span<const double> sample2,
                          TVariant variant = TVariant::Welch) {
  const std::size_t n1 = sample1.size(), n2 = sample2.size();
  if (n1 < 2 || n2 < 2)
    throw Error(ErrorKind::DegenerateSample,
                "need at least 2 observations per sample (got " +
                    std::to_string(n1) + " and " + std::to_string(n2) + ")");
  const double m1 = mean(sample1), m2 = mean(sample2);
  const double v1 = variance(sample1, m1), v2 = variance(sample2, m2);
  if (v1 == 0.0 && v2 == 0.0)
    throw Error(ErrorKind::DegenerateSample, "both samples have zero variance");

  TTestResult r;
  if (variant == TVariant::Welch) {
    const double se1 = v1 / static_cast<double>(n1);
    const double se2 = v2 / static_cast<double>(n2);
    r.t = (m1 - m2) / std::sqrt(se1 + se2);
    r.df = (se1 + se2) * (se1 + se2) /
           (se1 * se1 / static_cast<double>(n1 - 1) +
            se2 * se2 / static_cast<double>(n2 - 1));
  } else {
    const double pooled =
        ((static_cast<double>(n1 - 1)) * v1 + (static_cast<double>(n2 - 1)) * v2) /
        static_cast<double>(n1 + n2 - 2);
    r.t = (m1 - m2) /
          std::sqrt(pooled * (1.0 / static_cast<double>(n1) +
                              1.0 / static_cast<double>(n2)));
    r.df = static_cast<double>(n1 + n2 - 2);
  }
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

inline std::optional<TTestResult> try_t_test(std::span<const double> sample1,
                                             std::span<const double> sample2,
                                             TVariant variant = TVariant::Welch) {
  if (sample1.size() < 2 || sample2.size() < 2) return std::nullopt;
  const double m1 = mean(sample1), m2 = mean(sample2);
  if (variance(sample1, m1) == 0.0 && variance(sample2, m2) == 0.0)
    return std::nullopt;
  return t_test(sample1, sample2, variant);
}

// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, strict at each boundary.
inline const char* stars_for_p(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace stylesync
