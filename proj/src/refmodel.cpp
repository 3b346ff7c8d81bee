#include "calib/refmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "calib/rng.hpp"

namespace calib {

std::string trial_key(const std::string& subject, const std::string& trial_id) { return subject + "/" + trial_id; }

int FoldPlan::fold_of(const std::string& trial) const {
  const auto it = assignment.find(trial);
  if (it == assignment.end()) throw std::out_of_range(fmt::format("trial {} is not in the fold plan", trial));
  return it->second;
}

namespace {

FoldPlan deal(const std::vector<std::string>& order, int k, std::uint64_t seed) {
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto f = static_cast<int>(i % static_cast<std::size_t>(k));
    plan.folds[static_cast<std::size_t>(f)].push_back(order[i]);
    plan.assignment[order[i]] = f;
  }
  return plan;
}

void check_trials(const std::vector<std::string>& trials, int k) {
  if (k < 2) throw std::invalid_argument(fmt::format("need k >= 2 folds, got {}", k));
  if (trials.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument(fmt::format("{} trials cannot fill {} folds", trials.size(), k));
  }
  if (std::set<std::string>(trials.begin(), trials.end()).size() != trials.size()) {
    throw std::invalid_argument("trial ids must be unique");
  }
}

}  // namespace

FoldPlan make_folds(const std::vector<std::string>& trials, int k, std::uint64_t seed) {
  check_trials(trials, k);
  auto order = trials;
  Rng rng(seed);
  shuffle(order, rng);
  return deal(order, k, seed);
}

FoldPlan make_stratified_folds(const std::vector<std::string>& trials, const std::vector<int>& labels, int k,
                               std::uint64_t seed) {
  check_trials(trials, k);
  if (labels.size() != trials.size()) throw std::invalid_argument("one label per trial required");
  std::map<int, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < trials.size(); ++i) groups[labels[i]].push_back(trials[i]);
  Rng rng(seed);
  std::vector<std::string> order;
  for (auto& [label, members] : groups) {
    shuffle(members, rng);
    order.insert(order.end(), members.begin(), members.end());
  }
  return deal(order, k, seed);
}

std::vector<double> RefModel::logits(std::span<const double> x) const {
  std::vector<double> z(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    double s = bias[k];
    const double* w = weights.data() + k * features;
    for (std::size_t j = 0; j < features; ++j) s += w[j] * x[j];
    z[k] = s;
  }
  return z;
}

RefModel fit_softmax_regression(const kernels::DesignMatrix& x, std::span<const int> labels, std::size_t classes,
                                const TrainConfig& config) {
  if (classes < 2) throw std::invalid_argument("softmax regression needs at least two classes");
  if (x.rows != labels.size()) throw std::invalid_argument("one label per row required");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw std::invalid_argument("label out of range");
  }
  RefModel model;
  model.classes = classes;
  model.features = x.cols;
  model.weights.assign(classes * x.cols, 0.0);
  model.bias.assign(classes, 0.0);

  const auto evaluate = [&](const std::vector<double>& w, const std::vector<double>& b) {
    return kernels::omp::softmax_regression(x, labels, {w, b, classes}, config.lambda);
  };
  auto current = evaluate(model.weights, model.bias);
  if (!std::isfinite(current.loss)) throw std::runtime_error("training loss is not finite at initialization");
  model.training_log.push_back(current.loss);

  double step = config.initial_step;
  std::vector<double> w_try(model.weights.size()), b_try(classes);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double g2 = 0.0;
    for (double g : current.grad_weights) g2 += g * g;
    for (double g : current.grad_bias) g2 += g * g;
    if (g2 == 0.0) {
      model.training_log.push_back(current.loss);
      continue;
    }
    bool accepted = false;
    while (step > 1e-14) {
      for (std::size_t i = 0; i < w_try.size(); ++i) w_try[i] = model.weights[i] - step * current.grad_weights[i];
      for (std::size_t k = 0; k < classes; ++k) b_try[k] = model.bias[k] - step * current.grad_bias[k];
      auto candidate = evaluate(w_try, b_try);
      if (std::isnan(candidate.loss)) {
        throw std::runtime_error(fmt::format("training diverged at epoch {} (loss is NaN)", epoch));
      }
      if (candidate.loss <= current.loss - 1e-4 * step * g2) {
        model.weights.swap(w_try);
        model.bias.swap(b_try);
        w_try.resize(model.weights.size());
        b_try.resize(classes);
        current = std::move(candidate);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    model.training_log.push_back(current.loss);
    if (accepted) {
      step = std::min(step * 2.0, config.max_step);
    } else {
      step = config.initial_step;
    }
  }
  return model;
}

std::vector<std::string> trial_keys(const EpochSet& epochs, std::vector<int>* labels) {
  std::vector<std::string> keys;
  std::set<std::string> seen;
  for (const auto& w : epochs.windows) {
    auto key = trial_key(w.subject, w.trial_id);
    if (seen.insert(key).second) {
      keys.push_back(std::move(key));
      if (labels) labels->push_back(w.label);
    }
  }
  return keys;
}

namespace {

struct Rows {
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::size_t> window_index;
};

Rows gather(const EpochSet& epochs, const std::set<std::string>& trials) {
  Rows rows;
  for (std::size_t i = 0; i < epochs.windows.size(); ++i) {
    const auto& w = epochs.windows[i];
    if (!trials.count(trial_key(w.subject, w.trial_id))) continue;
    rows.values.insert(rows.values.end(), w.data.begin(), w.data.end());
    rows.labels.push_back(w.label);
    rows.window_index.push_back(i);
  }
  return rows;
}

void emit(const EpochSet& epochs, const RefModel& model, const Rows& rows, int fold, Split split, PredictionSet& out) {
  for (std::size_t i : rows.window_index) {
    const auto& w = epochs.windows[i];
    PredictionRecord r;
    r.logits = model.logits(w.data);
    r.probs = softmax(*r.logits);
    r.label = w.label;
    r.subject_id = w.subject;
    r.fold_id = fold;
    r.split = split;
    r.trial_id = w.trial_id;
    out.records.push_back(std::move(r));
  }
}

FoldResult run_fold(const EpochSet& epochs, const FoldPlan& plan, int fold, std::size_t classes,
                    const TrainConfig& config) {
  FoldResult result;
  result.fold = fold;
  result.test_trials = plan.folds[static_cast<std::size_t>(fold)];
  std::vector<std::string> training;
  for (int f = 0; f < plan.k; ++f) {
    if (f == fold) continue;
    const auto& members = plan.folds[static_cast<std::size_t>(f)];
    training.insert(training.end(), members.begin(), members.end());
  }
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(training.size())));
  if (config.validation_fraction > 0.0 && n_val == 0 && training.size() >= 2) n_val = 1;
  result.validation_trials.assign(training.end() - static_cast<std::ptrdiff_t>(n_val), training.end());
  result.train_trials.assign(training.begin(), training.end() - static_cast<std::ptrdiff_t>(n_val));

  const auto train_rows = gather(epochs, {result.train_trials.begin(), result.train_trials.end()});
  if (train_rows.labels.empty()) throw std::invalid_argument(fmt::format("fold {} has no training windows", fold));
  const kernels::DesignMatrix x{train_rows.values, train_rows.labels.size(), epochs.feature_size()};
  try {
    result.model = fit_softmax_regression(x, train_rows.labels, classes, config);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(fmt::format("fold {}: {}", fold, e.what()));
  }

  result.predictions.num_classes = static_cast<int>(classes);
  emit(epochs, result.model, gather(epochs, {result.validation_trials.begin(), result.validation_trials.end()}), fold,
       Split::validation, result.predictions);
  emit(epochs, result.model, gather(epochs, {result.test_trials.begin(), result.test_trials.end()}), fold, Split::test,
       result.predictions);
  return result;
}

}  // namespace

std::vector<FoldResult> cross_validate(const EpochSet& epochs, const FoldPlan& plan, const TrainConfig& config) {
  if (epochs.windows.empty()) throw std::invalid_argument("no windows to train on");
  const auto classes = static_cast<std::size_t>(std::max(epochs.num_classes(), 2));
  for (const auto& w : epochs.windows) {
    if (w.label < 0) throw std::invalid_argument("negative window label");
    if (!std::all_of(w.data.begin(), w.data.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument(fmt::format("non-finite feature in trial {}", w.trial_id));
    }
    if (!plan.assignment.count(trial_key(w.subject, w.trial_id))) {
      throw std::invalid_argument(fmt::format("trial {} is missing from the fold plan", w.trial_id));
    }
  }

  std::vector<FoldResult> results(static_cast<std::size_t>(plan.k));
  std::vector<std::string> errors(results.size());
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < plan.k; ++f) {
    try {
      results[static_cast<std::size_t>(f)] = run_fold(epochs, plan, f, classes, config);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(f)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return results;
}

PredictionSet merge_predictions(const std::vector<FoldResult>& folds) {
  PredictionSet out;
  if (!folds.empty()) out.num_classes = folds.front().predictions.num_classes;
  for (const auto& f : folds) {
    out.records.insert(out.records.end(), f.predictions.records.begin(), f.predictions.records.end());
  }
  return out;
}

}  // namespace calib
