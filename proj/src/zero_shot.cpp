#include "qe/zero_shot.hpp"

#include <algorithm>
#include <numeric>

#include "qe/rng.hpp"
#include "qe/ter.hpp"

namespace qe {

std::vector<Corpus> select_relevant_pairs(const std::vector<Corpus>& available,
                                          const LanguagePair& test_pair) {
  std::vector<Corpus> out;
  for (const Corpus& corpus : available) {
    if (corpus.pair.target_lang != test_pair.target_lang) continue;
    if (corpus.pair.source_lang == test_pair.source_lang) continue;  // the test pair itself
    out.push_back(corpus);
  }
  if (out.empty()) {
    throw QEError(ErrorCode::NoRelevantPairs,
                  "no corpus shares target language '" + test_pair.target_lang + "' with " +
                      test_pair.name());
  }
  return out;
}

std::vector<PseudoReferenceRecord> generate_pseudo_references(const Corpus& corpus,
                                                              TranslationClient& client,
                                                              const NormalizationConfig& norm,
                                                              const ShiftConfig& shift,
                                                              ClientFailurePolicy policy) {
  std::vector<PseudoReferenceRecord> out;
  out.reserve(corpus.records.size());
  for (const QERecord& rec : corpus.records) {
    std::string translated;
    try {
      translated =
          client.translate(corpus.pair.source_lang, corpus.pair.target_lang, rec.source_raw);
    } catch (const QEError& e) {
      if (e.code() != ErrorCode::ClientFailure || policy == ClientFailurePolicy::Abort) {
        throw QEError(ErrorCode::ClientFailure,
                      "record " + std::to_string(rec.id) + ": " + e.what());
      }
      continue;
    }
    PseudoReferenceRecord pr;
    pr.base = rec;
    pr.base.origin_pair = corpus.pair.name();
    pr.origin = corpus.pair;
    pr.pseudo_reference_raw = translated;
    pr.pseudo_reference = normalize(translated, norm);
    pr.hter_vs_pseudo = compute_hter(rec.translation, pr.pseudo_reference, shift);
    out.push_back(std::move(pr));
  }
  return out;
}

Corpus merge_for_zero_shot(const std::vector<Corpus>& originals,
                           const std::vector<PseudoReferenceRecord>& pseudo) {
  if (originals.empty() && pseudo.empty()) {
    throw QEError(ErrorCode::EmptyInput, "nothing to merge");
  }

  const std::string target = originals.empty() ? pseudo.front().origin.target_lang
                                               : originals.front().pair.target_lang;
  bool single_source = true;
  std::string source = originals.empty() ? pseudo.front().origin.source_lang
                                         : originals.front().pair.source_lang;
  for (const Corpus& corpus : originals) {
    if (corpus.pair.target_lang != target) {
      throw QEError(ErrorCode::TargetLangMismatch, "corpus " + corpus.pair.name() +
                                                       " does not target '" + target + "'");
    }
    if (corpus.pair.source_lang != source) single_source = false;
  }
  for (const PseudoReferenceRecord& pr : pseudo) {
    if (pr.origin.target_lang != target) {
      throw QEError(ErrorCode::TargetLangMismatch, "pseudo record " + std::to_string(pr.base.id) +
                                                       " from " + pr.origin.name() +
                                                       " does not target '" + target + "'");
    }
    if (pr.origin.source_lang != source) single_source = false;
  }

  Corpus merged;
  merged.pair = LanguagePair{single_source ? source : "multi", target};
  merged.split = Split::Train;

  int next_id = 0;
  for (const Corpus& corpus : originals) {
    for (QERecord rec : corpus.records) {
      rec.id = next_id++;
      if (rec.origin_pair.empty()) rec.origin_pair = corpus.pair.name();
      merged.records.push_back(std::move(rec));
    }
  }
  for (const PseudoReferenceRecord& pr : pseudo) {
    QERecord rec = pr.base;
    rec.id = next_id++;
    rec.provenance = QERecord::Provenance::Pseudo;
    rec.origin_pair = pr.origin.name();
    rec.post_edit_raw = pr.pseudo_reference_raw;
    rec.post_edit = pr.pseudo_reference;
    rec.hter = pr.hter_vs_pseudo;
    merged.records.push_back(std::move(rec));
  }
  return merged;
}

std::pair<Corpus, Corpus> split_for_dev(const Corpus& merged, double dev_fraction,
                                        std::uint64_t seed) {
  if (dev_fraction < 0.0 || dev_fraction >= 1.0) {
    throw QEError(ErrorCode::InvalidConfig, "dev fraction must be in [0, 1)");
  }
  const int n = static_cast<int>(merged.records.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xDE7u));
  rng.shuffle(order);

  const int n_dev = static_cast<int>(n * dev_fraction);
  std::vector<int> dev_positions(order.begin(), order.begin() + n_dev);
  std::vector<int> train_positions(order.begin() + n_dev, order.end());
  std::sort(dev_positions.begin(), dev_positions.end());
  std::sort(train_positions.begin(), train_positions.end());

  Corpus train, dev;
  train.pair = dev.pair = merged.pair;
  train.split = Split::Train;
  dev.split = Split::Dev;
  for (int pos : train_positions) train.records.push_back(merged.records[pos]);
  for (int pos : dev_positions) dev.records.push_back(merged.records[pos]);
  return {std::move(train), std::move(dev)};
}

}  // namespace qe
