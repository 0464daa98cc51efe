#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emotionpush/matrix.hpp"

namespace emotionpush::svm {

struct TrainParams {
  double c = 1.0;        // box constraint
  double gamma = -1.0;   // RBF width; negative means 1/dim
  double kkt_eps = 1e-3;
  std::uint64_t max_iter = 10'000'000;
  int calib_folds = 3;
  std::uint64_t seed = 0;
  std::size_t cache_rows = 512;

  // gamma with the 1/dim default applied.
  double resolved_gamma(std::size_t dim) const noexcept {
    return gamma < 0.0 ? 1.0 / static_cast<double>(dim == 0 ? 1 : dim) : gamma;
  }
};

// Trained binary classifier. decision_value(x) = sum_i coeffs[i] k(sv_i, x) + bias,
// probability = 1 / (1 + exp(platt_a * f + platt_b)).
struct SvmModel {
  std::size_t dim = 0;
  FeatureMatrix support_vectors;
  std::vector<double> coeffs;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.0;
  double platt_a = -1.0;
  double platt_b = 0.0;

  std::size_t num_support_vectors() const noexcept { return coeffs.size(); }

  friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

// Raw outcome of the dual solver, before support vectors are extracted.
struct DualSolution {
  std::vector<double> alpha;   // one per training sample, in [0, C]
  double bias = 0.0;
  double objective = 0.0;      // sum(alpha) - 1/2 alpha' Q alpha
  double max_violation = 0.0;  // m(alpha) - M(alpha) at exit
  std::uint64_t iterations = 0;
  bool converged = false;
};

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

// C-SVC dual by SMO with maximal-violating-pair working sets. labels are +1/-1.
// Throws InvalidArgument on single-class, non-finite, mismatched or
// degenerate (all rows identical) input.
DualSolution solve_dual(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params);

// Decision function only (Platt pair left at a = -1, b = 0).
SvmModel train_uncalibrated(const FeatureMatrix& features, std::span<const int> labels,
                            const TrainParams& params, DualSolution* solution = nullptr);

// Full training: dual solve plus a Platt fit on out-of-fold decision values
// from params.calib_folds-fold cross-fitting.
SvmModel train_svc(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params,
                   DualSolution* solution = nullptr);

double decision_value(const SvmModel& model, std::span<const double> x);
double predict_proba(const SvmModel& model, std::span<const double> x);

struct PlattParams {
  double a = -1.0;
  double b = 0.0;
};

// Sigmoid fit by Newton's method with backtracking on the regularized
// negative log-likelihood with targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
// The returned a is strictly negative, so probabilities increase with f.
PlattParams fit_platt(std::span<const double> decision_values, std::span<const int> labels);

// Negative log-likelihood minimized by fit_platt (exposed for verification).
double platt_objective(std::span<const double> decision_values, std::span<const int> labels, double a, double b);

// 1 / (1 + exp(a f + b)), kept strictly inside (0, 1).
double platt_probability(double a, double b, double f) noexcept;

// Versioned binary container: "EPSVM", u16 version, payload, CRC-32(payload).
inline constexpr std::uint16_t kModelFormatVersion = 1;
std::string save_model(const SvmModel& model);
SvmModel load_model(std::string_view bytes);

}  // namespace emotionpush::svm
