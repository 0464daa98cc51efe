#include <cmath>
#include <limits>
#include <string>

#include "emotionpush/error.hpp"
#include "emotionpush/svm.hpp"

namespace emotionpush::svm {
namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kMinStep = 1e-10;
constexpr double kHessianRidge = 1e-12;
constexpr double kGradientTolerance = 1e-10;
// Slope substituted when the unconstrained fit does not have a < 0.
constexpr double kMinimumSlope = 1e-6;

struct Targets {
  std::vector<double> t;
  double pos = 0.0;
  double neg = 0.0;
};

Targets smoothed_targets(std::span<const double> values, std::span<const int> labels) {
  if (values.size() != labels.size()) {
    throw InvalidArgument("fit_platt: values and labels differ in length");
  }
  Targets out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InvalidArgument("fit_platt: non-finite decision value");
    }
    if (labels[i] == 1) {
      out.pos += 1.0;
    } else if (labels[i] == -1) {
      out.neg += 1.0;
    } else {
      throw InvalidArgument("fit_platt: labels must be +1 or -1");
    }
  }
  if (out.pos == 0.0 || out.neg == 0.0) {
    throw InvalidArgument("fit_platt: single-class input");
  }
  const double hi = (out.pos + 1.0) / (out.pos + 2.0);
  const double lo = 1.0 / (out.neg + 2.0);
  out.t.reserve(labels.size());
  for (int y : labels) out.t.push_back(y > 0 ? hi : lo);
  return out;
}

double objective(std::span<const double> f, const std::vector<double>& t, double a, double b) {
  double value = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = f[i] * a + b;
    if (z >= 0.0) {
      value += t[i] * z + std::log1p(std::exp(-z));
    } else {
      value += (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
  }
  return value;
}

// Returns p = 1/(1+exp(z)) and q = 1 - p without overflow.
std::pair<double, double> sigmoid_pair(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
  }
  const double e = std::exp(z);
  return {1.0 / (1.0 + e), e / (1.0 + e)};
}

// Newton with backtracking over b alone, a held fixed.
double fit_intercept(std::span<const double> f, const std::vector<double>& t, double a, double b) {
  double value = objective(f, t, a, b);
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    double g = 0.0;
    double h = kHessianRidge;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto [p, q] = sigmoid_pair(f[i] * a + b);
      g += t[i] - p;
      h += p * q;
    }
    if (std::abs(g) < kGradientTolerance) break;
    const double step_dir = -g / h;
    double step = 1.0;
    while (step >= kMinStep) {
      const double candidate = b + step * step_dir;
      const double next = objective(f, t, a, candidate);
      if (next < value + 1e-4 * step * g * step_dir) {
        b = candidate;
        value = next;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  return b;
}

}  // namespace

double platt_objective(std::span<const double> decision_values, std::span<const int> labels, double a, double b) {
  const Targets targets = smoothed_targets(decision_values, labels);
  return objective(decision_values, targets.t, a, b);
}

PlattParams fit_platt(std::span<const double> decision_values, std::span<const int> labels) {
  const Targets targets = smoothed_targets(decision_values, labels);
  const auto& t = targets.t;
  const auto f = decision_values;

  double a = 0.0;
  double b = std::log((targets.neg + 1.0) / (targets.pos + 1.0));
  double value = objective(f, t, a, b);

  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    double h11 = kHessianRidge;
    double h22 = kHessianRidge;
    double h21 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto [p, q] = sigmoid_pair(f[i] * a + b);
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kGradientTolerance && std::abs(g2) < kGradientTolerance) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double next = objective(f, t, na, nb);
      if (next < value + 1e-4 * step * gd) {
        a = na;
        b = nb;
        value = next;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }

  if (!(a < 0.0)) {
    // Decision values carry no (or inverted) signal; keep the probability
    // increasing in f and refit the intercept.
    a = -kMinimumSlope;
    b = fit_intercept(f, t, a, b);
  }
  return {a, b};
}

double platt_probability(double a, double b, double f) noexcept {
  const double z = a * f + b;
  double p;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    p = e / (1.0 + e);
  } else {
    p = 1.0 / (1.0 + std::exp(z));
  }
  constexpr double kLow = std::numeric_limits<double>::min();
  const double high = std::nextafter(1.0, 0.0);
  return p < kLow ? kLow : (p > high ? high : p);
}

}  // namespace emotionpush::svm
