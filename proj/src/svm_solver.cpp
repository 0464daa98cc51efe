#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <list>
#include <string>

#include "emotionpush/error.hpp"
#include "emotionpush/folds.hpp"
#include "emotionpush/svm.hpp"

namespace emotionpush::svm {
namespace {

constexpr double kTau = 1e-12;

// Rows of Q_ij = y_i y_j k(x_i, x_j), computed on demand and kept in an LRU
// cache of fixed row capacity.
class QMatrix {
 public:
  QMatrix(const FeatureMatrix& x, std::span<const int> y, double gamma, std::size_t capacity)
      : x_(x), y_(y), gamma_(gamma), capacity_(std::max<std::size_t>(capacity, 2)), slot_of_(x.rows(), kNone) {}

  // Valid until two further distinct rows have been requested.
  std::span<const double> row(std::size_t i) {
    const std::size_t n = x_.rows();
    if (slot_of_[i] != kNone) {
      auto& entry = slots_[slot_of_[i]];
      lru_.splice(lru_.begin(), lru_, entry.position);
      return entry.values;
    }
    std::size_t slot;
    if (slots_.size() < capacity_) {
      slot = slots_.size();
      slots_.push_back({std::vector<double>(n), {}, kNone});
    } else {
      slot = lru_.back();
      lru_.pop_back();
      slot_of_[slots_[slot].owner] = kNone;
    }
    auto& entry = slots_[slot];
    const auto xi = x_.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      entry.values[j] = static_cast<double>(y_[i] * y_[j]) * rbf_kernel(xi, x_.row(j), gamma_);
    }
    entry.owner = i;
    lru_.push_front(slot);
    entry.position = lru_.begin();
    slot_of_[i] = slot;
    return entry.values;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Slot {
    std::vector<double> values;
    std::list<std::size_t>::iterator position;
    std::size_t owner;
  };

  const FeatureMatrix& x_;
  std::span<const int> y_;
  double gamma_;
  std::size_t capacity_;
  std::vector<std::size_t> slot_of_;
  std::vector<Slot> slots_;
  std::list<std::size_t> lru_;
};

void validate_training_input(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params) {
  const std::size_t n = features.rows();
  if (labels.size() != n) {
    throw InvalidArgument("svm: " + std::to_string(n) + " feature rows but " + std::to_string(labels.size()) +
                          " labels");
  }
  if (n < 2) {
    throw InvalidArgument("svm: need at least 2 training samples");
  }
  if (!(params.c > 0.0) || !std::isfinite(params.c)) {
    throw InvalidArgument("svm: C must be positive and finite");
  }
  if (!(params.kkt_eps > 0.0)) {
    throw InvalidArgument("svm: kkt_eps must be positive");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (int y : labels) {
    if (y == 1) {
      has_pos = true;
    } else if (y == -1) {
      has_neg = true;
    } else {
      throw InvalidArgument("svm: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) {
    throw InvalidArgument("svm: single-class input, both +1 and -1 labels are required");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("svm: non-finite feature value");
    }
  }
  const auto first = features.row(0);
  bool all_identical = true;
  for (std::size_t i = 1; i < n && all_identical; ++i) {
    all_identical = std::equal(first.begin(), first.end(), features.row(i).begin());
  }
  if (all_identical) {
    throw InvalidArgument("svm: degenerate geometry, all training vectors are identical");
  }
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
  if (x.size() != z.size()) {
    throw InvalidArgument("rbf_kernel: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(z.size()) + ")");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - z[k];
    sq += d * d;
  }
  return std::exp(-gamma * sq);
}

DualSolution solve_dual(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params) {
  validate_training_input(features, labels, params);
  const std::size_t n = features.rows();
  const double c = params.c;
  const double gamma = params.resolved_gamma(features.cols());
  if (gamma < 0.0 || !std::isfinite(gamma)) {
    throw InvalidArgument("svm: gamma must be finite and non-negative");
  }

  QMatrix q(features, labels, gamma, params.cache_rows);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  const auto y = [&](std::size_t t) { return static_cast<double>(labels[t]); };
  const auto in_up = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
  const auto in_low = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

  DualSolution out;
  for (;;) {
    // Maximal violating pair: i maximizes -y G over I_up, j minimizes it over I_low.
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y(t) * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    out.max_violation = (i == n || j == n) ? 0.0 : g_max - g_min;
    if (out.max_violation <= params.kkt_eps) {
      out.converged = true;
      break;
    }
    if (out.iterations >= params.max_iter) {
      break;
    }
    ++out.iterations;

    const auto qi = q.row(i);
    const auto qj = q.row(j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];

    if (labels[i] != labels[j]) {
      double quad = qi[i] + qj[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qi[i] + qj[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += qi[t] * d_i + qj[t] * d_j;
    }
  }

  if (!out.converged) {
    std::clog << "warning: svm solver stopped after " << out.iterations
              << " iterations without reaching kkt_eps (violation " << out.max_violation << ")\n";
  }

  // Bias from the KKT conditions: average y G over free variables, or the
  // midpoint of the feasible interval when every variable is at a bound.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y(t) * grad[t];
    if (alpha[t] >= c) {
      if (labels[t] < 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (alpha[t] <= 0.0) {
      if (labels[t] > 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
  out.bias = -rho;

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    objective += alpha[t] * (1.0 - grad[t]);
  }
  out.objective = objective / 2.0;
  out.alpha = std::move(alpha);
  return out;
}

SvmModel train_uncalibrated(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params,
                            DualSolution* solution) {
  DualSolution dual = solve_dual(features, labels, params);
  SvmModel model;
  model.dim = features.cols();
  model.gamma = params.resolved_gamma(features.cols());
  model.bias = dual.bias;
  model.support_vectors = FeatureMatrix(0, model.dim);
  for (std::size_t t = 0; t < features.rows(); ++t) {
    if (dual.alpha[t] > 0.0) {
      model.support_vectors.append_row(features.row(t));
      model.coeffs.push_back(dual.alpha[t] * static_cast<double>(labels[t]));
    }
  }
  if (solution != nullptr) {
    *solution = std::move(dual);
  }
  return model;
}

namespace {

// Out-of-fold decision values from k-fold cross-fitting, or an empty vector
// when some class has fewer members than folds or a fold cannot be trained.
std::vector<double> out_of_fold_values(const FeatureMatrix& features, std::span<const int> labels,
                                       const TrainParams& params) {
  const auto k = static_cast<std::size_t>(std::max(params.calib_folds, 2));
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = labels.size() - pos;
  if (pos < k || neg < k) {
    return {};
  }
  const auto fold = stratified_fold_assignment(labels, k, params.seed);
  std::vector<double> values(labels.size());
  for (std::size_t f = 0; f < k; ++f) {
    FeatureMatrix train_x(0, features.cols());
    std::vector<int> train_y;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (fold[t] != f) {
        train_x.append_row(features.row(t));
        train_y.push_back(labels[t]);
      }
    }
    SvmModel partial;
    try {
      partial = train_uncalibrated(train_x, train_y, params);
    } catch (const InvalidArgument&) {
      return {};
    }
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (fold[t] == f) {
        values[t] = decision_value(partial, features.row(t));
      }
    }
  }
  return values;
}

}  // namespace

SvmModel train_svc(const FeatureMatrix& features, std::span<const int> labels, const TrainParams& params,
                   DualSolution* solution) {
  SvmModel model = train_uncalibrated(features, labels, params, solution);
  std::vector<double> values = out_of_fold_values(features, labels, params);
  if (values.empty()) {
    values.resize(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) {
      values[t] = decision_value(model, features.row(t));
    }
  }
  const PlattParams platt = fit_platt(values, labels);
  model.platt_a = platt.a;
  model.platt_b = platt.b;
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw InvalidArgument("decision_value: input has length " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.dim));
  }
  double sum = model.bias;
  for (std::size_t i = 0; i < model.coeffs.size(); ++i) {
    sum += model.coeffs[i] * rbf_kernel(model.support_vectors.row(i), x, model.gamma);
  }
  return sum;
}

double predict_proba(const SvmModel& model, std::span<const double> x) {
  return platt_probability(model.platt_a, model.platt_b, decision_value(model, x));
}

}  // namespace emotionpush::svm
