#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "qe/predictor.hpp"
#include "qe/tree.hpp"
#include "qe/types.hpp"

namespace qe {

// Mean of the per-row features (the three component predictions).
Vector average_combine(const Matrix& rows);

struct GBRTConfig {
  int n_estimators = 600;
  double learning_rate = 0.01;
  int min_samples_split = 3;
  int max_depth = 3;

  void validate() const;
};

// Stagewise additive model: F_0 is the training-gold mean and every stage
// adds learning_rate times a tree fit to the current residuals.
struct GBRTModel {
  double init_value = 0.0;
  double learning_rate = 0.0;
  std::vector<RegressionTree> trees;
  // Training sum of squared errors of the unclipped model after 0, 1, ...,
  // n_estimators stages; non-increasing by construction.
  std::vector<double> staged_training_sse;

  double predict_raw(const Eigen::Ref<const Vector>& x) const;
  double predict(const Eigen::Ref<const Vector>& x) const;  // clipped to [0, 1]
};

GBRTModel fit_gbrt(const Matrix& rows, const Vector& gold, const GBRTConfig& config);

struct AdaBoostR2Config {
  int n_estimators = 50;
  double learning_rate = 1.0;
  int min_samples_split = 2;
  int max_depth = 3;
  std::uint64_t seed = 42;

  void validate() const;
};

// One boosting stage as the fit saw it; kept for audit and for replaying the
// update arithmetic independently in tests.
struct BoostStageTrace {
  std::vector<int> sampled_indices;  // bootstrap draw, one entry per row
  Vector weights_before;             // distribution the draw used
  Vector stage_predictions;          // tree outputs on the original rows
  double max_error = 0.0;            // largest absolute error over rows
  double avg_loss = 0.0;             // weight-averaged linear loss
  double beta = 0.0;
  double stage_weight = 0.0;
  Vector weights_after;
  bool kept = false;
  bool stopped_perfect = false;  // every row predicted exactly
  bool stopped_weak = false;     // average loss reached 1/2
};

struct BoostTrace {
  std::vector<BoostStageTrace> stages;
};

struct AdaBoostR2Model {
  struct Stage {
    RegressionTree tree;
    double weight = 0.0;  // learning_rate * ln(1/beta)
  };

  std::vector<Stage> stages;

  // Weighted median of the stage outputs: the smallest prediction whose
  // cumulative stage weight reaches half the total.
  double predict_raw(const Eigen::Ref<const Vector>& x) const;
  double predict(const Eigen::Ref<const Vector>& x) const;  // clipped to [0, 1]
};

AdaBoostR2Model fit_adaboost_r2(const Matrix& rows, const Vector& gold,
                                const AdaBoostR2Config& config, BoostTrace* trace = nullptr);

enum class EnsembleKind { Average, AdaBoostR2, Gbrt };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

struct AverageModel {};

struct EnsembleModel {
  std::variant<std::monostate, AverageModel, AdaBoostR2Model, GBRTModel> model;

  bool fitted() const { return !std::holds_alternative<std::monostate>(model); }
  EnsembleKind kind() const;  // throws NotFitted while empty
};

EnsembleModel fit_ensemble(EnsembleKind kind, const Matrix& rows, const Vector& gold,
                           const GBRTConfig& gbrt, const AdaBoostR2Config& adaboost);

// Per-row combiner output, clipped to [0, 1].
Vector ensemble_predict(const EnsembleModel& model, const Matrix& rows);

struct StackConfig {
  int folds = 10;
  std::uint64_t seed = 42;  // fold assignment + derived per-fold training seeds
  EnsembleKind kind = EnsembleKind::Gbrt;
  EncoderSpec encoder;
  TrainConfig train;
  GBRTConfig gbrt;
  AdaBoostR2Config adaboost;

  void validate() const;
};

// Everything stack_train produced: the fitted combiner, the three component
// models retrained on the full corpus, the out-of-fold feature matrix the
// combiner was fit on, and the fold bookkeeping needed to audit that no
// record's feature row came from a model trained on that record.
struct StackResult {
  EnsembleModel combiner;
  std::vector<PredictorModel> components;  // order: SRC-MT, MT, MT-MT'
  Matrix oof_features;                     // one row per record, corpus order
  Vector oof_gold;
  std::vector<int> fold_of_record;              // corpus position -> fold
  std::vector<std::vector<int>> fold_train_ids;  // fold -> corpus positions its models saw
};

// Shuffles record positions with the stack seed, chops them into `folds`
// contiguous folds (the first n % folds get the extra record), trains the
// three component predictors per fold on the remaining folds, collects
// held-out predictions as combiner features, fits the combiner on them, and
// retrains the components on the whole corpus for inference.
StackResult stack_train(const Corpus& corpus, const BuilderConfig& builder,
                        const StackConfig& config);

// The three component predictions for each corpus record, corpus order, as
// combiner input rows. MT-MT' partners come from partner_pool (the corpus
// itself when null).
Matrix component_features(const std::vector<PredictorModel>& components, const Corpus& corpus,
                          const BuilderConfig& builder, std::uint64_t partner_seed,
                          const Corpus* partner_pool = nullptr);

}  // namespace qe
