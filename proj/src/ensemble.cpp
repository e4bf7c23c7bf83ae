#include "qe/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qe/rng.hpp"

namespace qe {
namespace {

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

void check_rows(const Matrix& rows, const Vector& gold) {
  if (rows.rows() != gold.size()) {
    throw QEError(ErrorCode::LengthMismatch, "feature rows and gold labels disagree: " +
                                                 std::to_string(rows.rows()) + " vs " +
                                                 std::to_string(gold.size()));
  }
  if (rows.rows() < 2) {
    throw QEError(ErrorCode::TooFewRows,
                  "need at least 2 rows to fit, got " + std::to_string(rows.rows()));
  }
}

Corpus subset(const Corpus& corpus, const std::vector<int>& positions) {
  Corpus out;
  out.pair = corpus.pair;
  out.split = corpus.split;
  out.records.reserve(positions.size());
  for (int pos : positions) out.records.push_back(corpus.records[pos]);
  return out;
}

}  // namespace

Vector average_combine(const Matrix& rows) {
  if (rows.rows() == 0) throw QEError(ErrorCode::EmptyBatch, "no feature rows to combine");
  return rows.rowwise().mean();
}

void GBRTConfig::validate() const {
  if (n_estimators < 1) throw QEError(ErrorCode::InvalidConfig, "gbrt needs at least 1 estimator");
  if (learning_rate < 0.0) {
    throw QEError(ErrorCode::InvalidConfig, "gbrt learning rate must be non-negative");
  }
  if (min_samples_split < 2) {
    throw QEError(ErrorCode::InvalidConfig, "gbrt min_samples_split must be at least 2");
  }
  if (max_depth < 0) throw QEError(ErrorCode::InvalidConfig, "gbrt max_depth must be non-negative");
}

double GBRTModel::predict_raw(const Eigen::Ref<const Vector>& x) const {
  double y = init_value;
  for (const RegressionTree& tree : trees) y += learning_rate * tree.predict(x);
  return y;
}

double GBRTModel::predict(const Eigen::Ref<const Vector>& x) const { return clip01(predict_raw(x)); }

GBRTModel fit_gbrt(const Matrix& rows, const Vector& gold, const GBRTConfig& config) {
  config.validate();
  check_rows(rows, gold);
  const int n = static_cast<int>(rows.rows());

  GBRTModel model;
  model.init_value = gold.mean();
  model.learning_rate = config.learning_rate;
  model.trees.reserve(config.n_estimators);

  Vector current = Vector::Constant(n, model.init_value);
  model.staged_training_sse.push_back((gold - current).squaredNorm());
  for (int m = 0; m < config.n_estimators; ++m) {
    const Vector residuals = gold - current;
    RegressionTree tree =
        fit_tree(rows, residuals, config.min_samples_split, config.max_depth);
    for (int i = 0; i < n; ++i) {
      current(i) += config.learning_rate * tree.predict(rows.row(i).transpose());
    }
    model.trees.push_back(std::move(tree));
    model.staged_training_sse.push_back((gold - current).squaredNorm());
  }
  return model;
}

void AdaBoostR2Config::validate() const {
  if (n_estimators < 1) {
    throw QEError(ErrorCode::InvalidConfig, "adaboost needs at least 1 estimator");
  }
  if (learning_rate <= 0.0) {
    throw QEError(ErrorCode::InvalidConfig, "adaboost learning rate must be positive");
  }
  if (min_samples_split < 2) {
    throw QEError(ErrorCode::InvalidConfig, "adaboost min_samples_split must be at least 2");
  }
  if (max_depth < 0) {
    throw QEError(ErrorCode::InvalidConfig, "adaboost max_depth must be non-negative");
  }
}

double AdaBoostR2Model::predict_raw(const Eigen::Ref<const Vector>& x) const {
  if (stages.empty()) throw QEError(ErrorCode::NotFitted, "boost model has no stages");
  std::vector<std::pair<double, double>> outputs;  // (prediction, stage weight)
  outputs.reserve(stages.size());
  double total = 0.0;
  for (const Stage& s : stages) {
    outputs.emplace_back(s.tree.predict(x), s.weight);
    total += s.weight;
  }
  std::sort(outputs.begin(), outputs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double cum = 0.0;
  for (const auto& [pred, weight] : outputs) {
    cum += weight;
    if (cum >= total / 2.0) return pred;
  }
  return outputs.back().first;  // float-accumulation safety net
}

double AdaBoostR2Model::predict(const Eigen::Ref<const Vector>& x) const {
  return clip01(predict_raw(x));
}

AdaBoostR2Model fit_adaboost_r2(const Matrix& rows, const Vector& gold,
                                const AdaBoostR2Config& config, BoostTrace* trace) {
  config.validate();
  check_rows(rows, gold);
  const int n = static_cast<int>(rows.rows());

  AdaBoostR2Model model;
  Vector weights = Vector::Constant(n, 1.0 / n);
  Rng rng(config.seed);

  for (int stage = 0; stage < config.n_estimators; ++stage) {
    BoostStageTrace st;
    st.weights_before = weights;

    // Bootstrap draw by the current weight distribution.
    std::vector<double> cdf(n);
    double running = 0.0;
    for (int i = 0; i < n; ++i) {
      running += weights(i);
      cdf[i] = running;
    }
    Matrix sampled_rows(n, rows.cols());
    Vector sampled_targets(n);
    st.sampled_indices.reserve(n);
    for (int j = 0; j < n; ++j) {
      const double u = rng.uniform() * running;
      const int idx = std::min<int>(
          n - 1, static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()));
      st.sampled_indices.push_back(idx);
      sampled_rows.row(j) = rows.row(idx);
      sampled_targets(j) = gold(idx);
    }

    RegressionTree tree =
        fit_tree(sampled_rows, sampled_targets, config.min_samples_split, config.max_depth);
    st.stage_predictions = Vector(n);
    for (int i = 0; i < n; ++i) st.stage_predictions(i) = tree.predict(rows.row(i).transpose());

    const Vector errors = (st.stage_predictions - gold).cwiseAbs();
    st.max_error = errors.maxCoeff();

    if (st.max_error == 0.0) {
      // This stage already fits every row exactly; keep it and stop. Its
      // weight only matters relative to earlier imperfect stages, where a
      // unit vote matches the usual convention for a perfect fit.
      st.beta = 0.0;
      st.stage_weight = 1.0;
      st.weights_after = weights;
      st.kept = true;
      st.stopped_perfect = true;
      model.stages.push_back({std::move(tree), st.stage_weight});
      if (trace) trace->stages.push_back(std::move(st));
      break;
    }

    const Vector losses = errors / st.max_error;  // linear loss, in [0, 1]
    st.avg_loss = weights.dot(losses);

    if (st.avg_loss >= 0.5) {
      // Too weak to help. Drop it and stop -- unless it is the only stage,
      // in which case keep it (weight 0 still makes the single-stage median
      // return its output) so the model can predict at all.
      st.stopped_weak = true;
      st.kept = model.stages.empty();
      st.weights_after = weights;
      if (st.kept) model.stages.push_back({std::move(tree), 0.0});
      if (trace) trace->stages.push_back(std::move(st));
      break;
    }

    st.beta = st.avg_loss / (1.0 - st.avg_loss);
    st.stage_weight = config.learning_rate * std::log(1.0 / st.beta);
    for (int i = 0; i < n; ++i) {
      weights(i) *= std::pow(st.beta, (1.0 - losses(i)) * config.learning_rate);
    }
    weights /= weights.sum();
    st.weights_after = weights;
    st.kept = true;
    model.stages.push_back({std::move(tree), st.stage_weight});
    if (trace) trace->stages.push_back(std::move(st));
  }

  return model;
}

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::Average:
      return "average";
    case EnsembleKind::AdaBoostR2:
      return "adaboost";
    case EnsembleKind::Gbrt:
      return "gbrt";
  }
  return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "average") return EnsembleKind::Average;
  if (name == "adaboost") return EnsembleKind::AdaBoostR2;
  if (name == "gbrt") return EnsembleKind::Gbrt;
  throw QEError(ErrorCode::InvalidConfig,
                "unknown ensemble kind '" + name + "' (expected average, adaboost, or gbrt)");
}

EnsembleKind EnsembleModel::kind() const {
  if (std::holds_alternative<AverageModel>(model)) return EnsembleKind::Average;
  if (std::holds_alternative<AdaBoostR2Model>(model)) return EnsembleKind::AdaBoostR2;
  if (std::holds_alternative<GBRTModel>(model)) return EnsembleKind::Gbrt;
  throw QEError(ErrorCode::NotFitted, "ensemble model has not been fitted");
}

EnsembleModel fit_ensemble(EnsembleKind kind, const Matrix& rows, const Vector& gold,
                           const GBRTConfig& gbrt, const AdaBoostR2Config& adaboost) {
  EnsembleModel out;
  switch (kind) {
    case EnsembleKind::Average:
      out.model = AverageModel{};
      break;
    case EnsembleKind::AdaBoostR2:
      out.model = fit_adaboost_r2(rows, gold, adaboost);
      break;
    case EnsembleKind::Gbrt:
      out.model = fit_gbrt(rows, gold, gbrt);
      break;
  }
  return out;
}

Vector ensemble_predict(const EnsembleModel& model, const Matrix& rows) {
  if (!model.fitted()) throw QEError(ErrorCode::NotFitted, "ensemble model has not been fitted");
  const int n = static_cast<int>(rows.rows());
  Vector out(n);
  if (std::holds_alternative<AverageModel>(model.model)) {
    const Vector means = average_combine(rows);
    for (int i = 0; i < n; ++i) out(i) = clip01(means(i));
    return out;
  }
  if (const auto* boost = std::get_if<AdaBoostR2Model>(&model.model)) {
    for (int i = 0; i < n; ++i) out(i) = boost->predict(rows.row(i).transpose());
    return out;
  }
  const auto& gbrt = std::get<GBRTModel>(model.model);
  for (int i = 0; i < n; ++i) out(i) = gbrt.predict(rows.row(i).transpose());
  return out;
}

void StackConfig::validate() const {
  if (folds < 2) throw QEError(ErrorCode::InvalidConfig, "stacking needs at least 2 folds");
  train.validate();
  gbrt.validate();
  adaboost.validate();
}

namespace {

// Seed for one component training run: fold_tag is 0 for the final full-set
// models and fold+1 during cross-validation, so every (fold, setting) pair
// trains with a distinct, reproducible stream.
std::uint64_t component_seed(std::uint64_t base, int fold_tag, int setting_index) {
  return mix_seed(base, (static_cast<std::uint64_t>(fold_tag) << 2) |
                            static_cast<std::uint64_t>(setting_index));
}

constexpr InputSetting kComponentOrder[3] = {InputSetting::SrcMt, InputSetting::Mt,
                                             InputSetting::MtMt};

}  // namespace

StackResult stack_train(const Corpus& corpus, const BuilderConfig& builder,
                        const StackConfig& config) {
  config.validate();
  const int n = static_cast<int>(corpus.records.size());
  for (const QERecord& rec : corpus.records) {
    if (!rec.hter) {
      throw QEError(ErrorCode::NoLabels,
                    "record " + std::to_string(rec.id) + " has no gold label");
    }
  }

  // Seeded shuffle, then contiguous folds; the first n % folds get one extra.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng fold_rng(mix_seed(config.seed, 0xF01D5u));
  fold_rng.shuffle(order);

  const int k = config.folds;
  std::vector<std::vector<int>> fold_members(k);
  {
    const int base = n / k;
    const int extra = n % k;
    int at = 0;
    for (int f = 0; f < k; ++f) {
      const int size = base + (f < extra ? 1 : 0);
      for (int j = 0; j < size; ++j) fold_members[f].push_back(order[at++]);
      std::sort(fold_members[f].begin(), fold_members[f].end());
      if (size < 2) {
        throw QEError(ErrorCode::FoldTooSmall, "fold " + std::to_string(f) + " has " +
                                                   std::to_string(size) +
                                                   " records; need at least 2");
      }
    }
  }

  StackResult result;
  result.fold_of_record.assign(n, -1);
  result.fold_train_ids.assign(k, {});
  for (int f = 0; f < k; ++f) {
    for (int pos : fold_members[f]) result.fold_of_record[pos] = f;
  }
  for (int f = 0; f < k; ++f) {
    for (int pos = 0; pos < n; ++pos) {
      if (result.fold_of_record[pos] != f) result.fold_train_ids[f].push_back(pos);
    }
  }

  result.oof_features = Matrix(n, 3);
  result.oof_gold = Vector(n);
  for (int pos = 0; pos < n; ++pos) result.oof_gold(pos) = corpus.records[pos].hter->value;

  for (int f = 0; f < k; ++f) {
    const Corpus train_sub = subset(corpus, result.fold_train_ids[f]);
    const Corpus held = subset(corpus, fold_members[f]);
    for (int s = 0; s < 3; ++s) {
      PredictorModel model = make_predictor(kComponentOrder[s], config.encoder);
      TrainConfig tc = config.train;
      tc.seed = component_seed(config.train.seed, f + 1, s);
      train(model, train_sub, builder, tc);
      // Held-out records may only borrow MT-MT' partners from what the
      // model was trained on, so no other fold's labels leak in.
      const auto preds = predict_corpus(model, held, builder, mix_seed(tc.seed, 1), &train_sub);
      for (std::size_t j = 0; j < preds.size(); ++j) {
        result.oof_features(fold_members[f][j], s) = preds[j].second;
      }
    }
  }

  result.combiner =
      fit_ensemble(config.kind, result.oof_features, result.oof_gold, config.gbrt, config.adaboost);

  for (int s = 0; s < 3; ++s) {
    PredictorModel model = make_predictor(kComponentOrder[s], config.encoder);
    TrainConfig tc = config.train;
    tc.seed = component_seed(config.train.seed, 0, s);
    train(model, corpus, builder, tc);
    result.components.push_back(std::move(model));
  }
  return result;
}

Matrix component_features(const std::vector<PredictorModel>& components, const Corpus& corpus,
                          const BuilderConfig& builder, std::uint64_t partner_seed,
                          const Corpus* partner_pool) {
  if (components.size() != 3) {
    throw QEError(ErrorCode::InvalidConfig,
                  "expected 3 component models, got " + std::to_string(components.size()));
  }
  Matrix out(static_cast<int>(corpus.records.size()), 3);
  for (int s = 0; s < 3; ++s) {
    if (components[s].setting != kComponentOrder[s]) {
      throw QEError(ErrorCode::SettingMismatch,
                    "component " + std::to_string(s) + " should be " +
                        to_string(kComponentOrder[s]) + " but is " +
                        to_string(components[s].setting));
    }
    const auto preds =
        predict_corpus(components[s], corpus, builder, mix_seed(partner_seed, s), partner_pool);
    for (std::size_t j = 0; j < preds.size(); ++j) {
      out(static_cast<int>(j), s) = preds[j].second;
    }
  }
  return out;
}

}  // namespace qe
