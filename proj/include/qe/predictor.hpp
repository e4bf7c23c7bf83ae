#pragma once

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qe/dataset.hpp"
#include "qe/encoder.hpp"
#include "qe/input_builder.hpp"
#include "qe/optimizer.hpp"
#include "qe/tokenizer.hpp"
#include "qe/types.hpp"

namespace qe {

// Regression head: prediction = sigmoid(w . h_cls + b), always in (0, 1).
struct RegressionHead {
  Vector w;
  double b = 0.0;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct EncoderSpec {
  enum class Kind { HashedBag, File };

  Kind kind = Kind::HashedBag;
  int buckets = 1 << 16;
  int dim = 64;
  double init_scale = 0.05;
  std::uint64_t init_seed = 42;
  std::string vectors_path;  // file kind only
};

struct PredictorModel {
  InputSetting setting = InputSetting::Mt;
  // monostate only before make_predictor/load fill the model in.
  std::variant<std::monostate, HashedBagEncoder, FileEmbeddingEncoder> encoder;
  RegressionHead head;

  int dim() const;
  Vector encode(const InputSequence& seq) const;
  bool trains_encoder() const {
    return std::holds_alternative<HashedBagEncoder>(encoder);
  }
};

// Head starts at w = 0, b = 0, so an untrained model predicts 0.5 everywhere.
PredictorModel make_predictor(InputSetting setting, const EncoderSpec& spec);

// Forward pass sigmoid(w . h + b). Throws SettingMismatch if the sequence
// origin differs from the model's input setting.
double predict(const PredictorModel& model, const InputSequence& seq);

double mse_loss(const Vector& preds, const Vector& golds);

// Gradients of the single-example squared error (predict(seq) - gold)^2.
// embedding_cols holds the touched bucket columns only.
struct Gradients {
  Vector head_w;
  double head_b = 0.0;
  std::map<int, Vector> embedding_cols;
};

Gradients compute_gradients(const PredictorModel& model, const InputSequence& seq, double gold);

struct BuilderConfig {
  Tokenizer tokenizer;
  int max_len = kDefaultMaxLen;
  double partner_threshold = 0.1;
};

struct LossTrace {
  std::vector<double> epoch_mean_loss;
};

// Minibatch AdamW over seeded-shuffled record order. MT-MT' partners are
// resampled each epoch with seed = config.seed + epoch, drawn from the
// training corpus itself. The file-embedding encoder trains only the head.
LossTrace train(PredictorModel& model, const Corpus& corpus, const BuilderConfig& builder,
                const TrainConfig& config);

// Predictions in corpus order. MT-MT' partners come from partner_pool (the
// corpus itself when null), seeded by partner_seed; when labels are missing
// on either side the threshold filter degrades to uniform sampling.
std::vector<std::pair<int, double>> predict_corpus(const PredictorModel& model,
                                                   const Corpus& corpus,
                                                   const BuilderConfig& builder,
                                                   std::uint64_t partner_seed,
                                                   const Corpus* partner_pool = nullptr);

// The input sequence predict_corpus would build for one record.
InputSequence build_for_setting(InputSetting setting, const QERecord& record,
                                const QERecord* partner, const BuilderConfig& builder);

}  // namespace qe
