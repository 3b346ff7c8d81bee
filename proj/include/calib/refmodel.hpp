#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "calib/core.hpp"
#include "calib/kernels.hpp"
#include "calib/signal.hpp"

namespace calib {

// Trials are identified by "subject/trial" so ids may repeat across subjects.
std::string trial_key(const std::string& subject, const std::string& trial_id);

struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> folds;
  std::map<std::string, int> assignment;

  int fold_of(const std::string& trial) const;
};

// Seeded shuffle, then round-robin deal into k folds.
FoldPlan make_folds(const std::vector<std::string>& trials, int k = 5, std::uint64_t seed = 0);

// Same, but each label's trials are shuffled separately and dealt in turn so
// class proportions stay close across folds.
FoldPlan make_stratified_folds(const std::vector<std::string>& trials, const std::vector<int>& labels, int k = 5,
                               std::uint64_t seed = 0);

struct TrainConfig {
  double lambda = 1e-3;
  int epochs = 500;
  double validation_fraction = 0.2;
  double initial_step = 1.0;
  double max_step = 1e3;
};

// Softmax regression: logits = W x + b.
struct RefModel {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> weights;  // classes x features
  std::vector<double> bias;
  std::vector<double> training_log;  // loss after each epoch (entry 0 = initial loss)

  std::vector<double> logits(std::span<const double> x) const;
};

// Full-batch gradient descent with Armijo backtracking from zero weights.
// The logged loss never increases. Throws std::runtime_error on a NaN loss.
RefModel fit_softmax_regression(const kernels::DesignMatrix& x, std::span<const int> labels, std::size_t classes,
                                const TrainConfig& config);

struct FoldResult {
  int fold = 0;
  RefModel model;
  PredictionSet predictions;  // validation + test records of this fold, with logits
  std::vector<std::string> train_trials;
  std::vector<std::string> validation_trials;
  std::vector<std::string> test_trials;
};

// Trial-wise cross-validation: fold f is the test set, the remaining trials
// (in fold order) train the model after the last `validation_fraction` of them
// is held out for temperature fitting.
std::vector<FoldResult> cross_validate(const EpochSet& epochs, const FoldPlan& plan, const TrainConfig& config);

// Concatenated predictions of all folds, fold-major.
PredictionSet merge_predictions(const std::vector<FoldResult>& folds);

// Distinct trial keys of an epoch set in first-seen order, with their labels.
std::vector<std::string> trial_keys(const EpochSet& epochs, std::vector<int>* labels = nullptr);

}  // namespace calib
