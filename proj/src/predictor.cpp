#include "qe/predictor.hpp"

#include <algorithm>
#include <cmath>

namespace qe {

namespace {

// Partner choice for building MT-MT' sequences outside training: constrained
// sampling when labels allow it, uniform otherwise. exclude_id handles the
// pool-is-the-corpus case.
const QERecord& choose_partner(const QERecord& record, const Corpus& pool, bool exclude_self,
                               double threshold, Rng& rng) {
  const bool pool_labeled =
      std::all_of(pool.records.begin(), pool.records.end(),
                  [](const QERecord& r) { return r.hter.has_value(); });
  if (record.hter && pool_labeled) return sample_partner_or_nearest(record, pool, threshold, rng);

  std::vector<const QERecord*> candidates;
  for (const QERecord& other : pool.records) {
    if (exclude_self && other.id == record.id) continue;
    candidates.push_back(&other);
  }
  if (candidates.empty())
    throw QEError(ErrorCode::NoCandidate, "partner pool is empty");
  return *candidates[rng.below(candidates.size())];
}

}  // namespace

int PredictorModel::dim() const {
  if (const auto* hashed = std::get_if<HashedBagEncoder>(&encoder)) return hashed->dim();
  if (const auto* file_enc = std::get_if<FileEmbeddingEncoder>(&encoder)) return file_enc->dim();
  throw QEError(ErrorCode::NotFitted, "predictor has no encoder yet");
}

Vector PredictorModel::encode(const InputSequence& seq) const {
  if (const auto* hashed = std::get_if<HashedBagEncoder>(&encoder))
    return hashed->encode(seq.tokens).h_cls;
  if (const auto* file_enc = std::get_if<FileEmbeddingEncoder>(&encoder))
    return file_enc->encode(seq.record_id, seq.origin);
  throw QEError(ErrorCode::NotFitted, "predictor has no encoder yet");
}

PredictorModel make_predictor(InputSetting setting, const EncoderSpec& spec) {
  PredictorModel model;
  model.setting = setting;
  if (spec.kind == EncoderSpec::Kind::HashedBag) {
    model.encoder.emplace<HashedBagEncoder>(spec.buckets, spec.dim, spec.init_scale,
                                            spec.init_seed);
  } else {
    model.encoder.emplace<FileEmbeddingEncoder>(FileEmbeddingEncoder::load_tsv(spec.vectors_path));
  }
  model.head.w = Vector::Zero(model.dim());
  model.head.b = 0.0;
  return model;
}

double predict(const PredictorModel& model, const InputSequence& seq) {
  if (seq.origin != model.setting)
    throw QEError(ErrorCode::SettingMismatch,
                  std::string("sequence origin ") + to_string(seq.origin) +
                      " fed to a " + to_string(model.setting) + " model");
  const Vector h = model.encode(seq);
  return sigmoid(model.head.w.dot(h) + model.head.b);
}

double mse_loss(const Vector& preds, const Vector& golds) {
  if (preds.size() != golds.size())
    throw QEError(ErrorCode::LengthMismatch, "mse_loss: prediction/gold lengths differ");
  if (preds.size() == 0) throw QEError(ErrorCode::EmptyBatch, "mse_loss: empty batch");
  return (preds - golds).squaredNorm() / static_cast<double>(preds.size());
}

Gradients compute_gradients(const PredictorModel& model, const InputSequence& seq, double gold) {
  const Vector h = model.encode(seq);
  const double p = sigmoid(model.head.w.dot(h) + model.head.b);
  // d/dz of (sigmoid(z) - y)^2.
  const double g = 2.0 * (p - gold) * p * (1.0 - p);

  Gradients out;
  out.head_w = g * h;
  out.head_b = g;
  if (const auto* hashed = std::get_if<HashedBagEncoder>(&model.encoder)) {
    const double total = static_cast<double>(seq.tokens.size());
    for (const auto& [bucket, count] : hashed->bucket_counts(seq.tokens))
      out.embedding_cols[bucket] = (g * count / total) * model.head.w;
  }
  return out;
}

InputSequence build_for_setting(InputSetting setting, const QERecord& record,
                                const QERecord* partner, const BuilderConfig& builder) {
  switch (setting) {
    case InputSetting::SrcMt: return build_src_mt(record, builder.tokenizer, builder.max_len);
    case InputSetting::Mt: return build_mt(record, builder.tokenizer, builder.max_len);
    case InputSetting::MtMt:
      if (!partner) throw QEError(ErrorCode::NoCandidate, "MT-MT' sequence built with no partner");
      return build_mt_mt(record, *partner, builder.tokenizer, builder.max_len);
  }
  throw QEError(ErrorCode::InvalidConfig, "unknown input setting");
}

LossTrace train(PredictorModel& model, const Corpus& corpus, const BuilderConfig& builder,
                const TrainConfig& config) {
  config.validate();
  const std::size_t n = corpus.records.size();
  if (n == 0) throw QEError(ErrorCode::EmptyInput, "training corpus is empty");
  for (const QERecord& rec : corpus.records)
    if (!rec.hter)
      throw QEError(ErrorCode::NoLabels, "record " + std::to_string(rec.id) + " has no hter");

  const int dim = model.dim();
  // Head parameters packed as [w; b] so one AdamW state covers both.
  Vector theta(dim + 1), m_head = Vector::Zero(dim + 1), v_head = Vector::Zero(dim + 1);
  theta.head(dim) = model.head.w;
  theta(dim) = model.head.b;

  auto* hashed = std::get_if<HashedBagEncoder>(&model.encoder);
  LazyAdamWTable table_opt(config);

  // SRC-MT and MT inputs are fixed across epochs; MT-MT' partners are not.
  std::vector<InputSequence> fixed_seqs;
  if (model.setting != InputSetting::MtMt) {
    fixed_seqs.reserve(n);
    for (const QERecord& rec : corpus.records)
      fixed_seqs.push_back(build_for_setting(model.setting, rec, nullptr, builder));
  }

  Rng shuffle_rng(config.seed);
  LossTrace trace;
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<InputSequence> epoch_seqs;
    if (model.setting == InputSetting::MtMt) {
      Rng partner_rng(config.seed + static_cast<std::uint64_t>(epoch));
      epoch_seqs.reserve(n);
      for (const QERecord& rec : corpus.records) {
        const QERecord& partner =
            sample_partner_or_nearest(rec, corpus, builder.partner_threshold, partner_rng);
        epoch_seqs.push_back(build_mt_mt(rec, partner, builder.tokenizer, builder.max_len));
      }
    }
    const std::vector<InputSequence>& seqs =
        model.setting == InputSetting::MtMt ? epoch_seqs : fixed_seqs;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    double epoch_sse = 0.0;
    for (std::size_t batch_start = 0; batch_start < n;
         batch_start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t batch_end =
          std::min(n, batch_start + static_cast<std::size_t>(config.batch_size));
      const double batch_n = static_cast<double>(batch_end - batch_start);

      Vector grad_head = Vector::Zero(dim + 1);
      std::map<int, Vector> grad_cols;
      for (std::size_t k = batch_start; k < batch_end; ++k) {
        const InputSequence& seq = seqs[order[k]];
        const double gold = corpus.records[order[k]].hter->value;
        const double pred = predict(model, seq);
        epoch_sse += (pred - gold) * (pred - gold);

        const Gradients g = compute_gradients(model, seq, gold);
        grad_head.head(dim) += g.head_w / batch_n;
        grad_head(dim) += g.head_b / batch_n;
        for (const auto& [col, gcol] : g.embedding_cols) {
          auto [it, inserted] = grad_cols.try_emplace(col);
          if (inserted) it->second = Vector::Zero(dim);
          it->second += gcol / batch_n;
        }
      }

      ++step;
      if (hashed) {
        table_opt.begin_step();
        for (const auto& [col, gcol] : grad_cols) table_opt.apply(hashed->table(), col, gcol);
      }
      adamw_step(theta, grad_head, m_head, v_head, config, step);
      model.head.w = theta.head(dim);
      model.head.b = theta(dim);
    }
    trace.epoch_mean_loss.push_back(epoch_sse / static_cast<double>(n));
  }

  if (hashed) {
    table_opt.finalize(hashed->table());
    hashed->set_untouched_scale(hashed->untouched_scale() * table_opt.untouched_decay());
  }
  return trace;
}

std::vector<std::pair<int, double>> predict_corpus(const PredictorModel& model,
                                                   const Corpus& corpus,
                                                   const BuilderConfig& builder,
                                                   std::uint64_t partner_seed,
                                                   const Corpus* partner_pool) {
  const Corpus& pool = partner_pool ? *partner_pool : corpus;
  const bool exclude_self = &pool == &corpus;
  Rng rng(partner_seed);
  std::vector<std::pair<int, double>> out;
  out.reserve(corpus.records.size());
  for (const QERecord& rec : corpus.records) {
    InputSequence seq;
    if (model.setting == InputSetting::MtMt) {
      const QERecord& partner =
          choose_partner(rec, pool, exclude_self, builder.partner_threshold, rng);
      seq = build_mt_mt(rec, partner, builder.tokenizer, builder.max_len);
    } else {
      seq = build_for_setting(model.setting, rec, nullptr, builder);
    }
    out.emplace_back(rec.id, predict(model, seq));
  }
  return out;
}

}  // namespace qe
