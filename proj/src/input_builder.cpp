#include "qe/input_builder.hpp"

#include <cmath>
#include <fstream>

namespace qe {

namespace {

// Trims tail tokens until a + b fits the budget, preferring the longer
// segment; ties trim the second segment first and alternate from there. Each
// originally non-empty segment keeps at least one token.
void fit_two_segments(std::vector<std::string>& a, std::vector<std::string>& b,
                      std::size_t budget) {
  bool trim_second = true;
  while (a.size() + b.size() > budget) {
    const bool a_can = a.size() > 1;
    const bool b_can = b.size() > 1;
    if (!a_can && !b_can) break;
    bool pick_b;
    if (a.size() > b.size()) {
      pick_b = false;
    } else if (b.size() > a.size()) {
      pick_b = true;
    } else {
      pick_b = trim_second;
      trim_second = !trim_second;
    }
    if (pick_b && !b_can) pick_b = false;
    if (!pick_b && !a_can) pick_b = true;
    if (pick_b) b.pop_back();
    else a.pop_back();
  }
}

InputSequence assemble_two_segment(std::vector<std::string> first, std::vector<std::string> second,
                                   InputSetting origin, int record_id, int max_len) {
  if (max_len < 5)
    throw QEError(ErrorCode::InvalidConfig, "max_len must be at least 5 for two-segment inputs");
  fit_two_segments(first, second, static_cast<std::size_t>(max_len - 3));
  InputSequence seq;
  seq.origin = origin;
  seq.record_id = record_id;
  seq.tokens.reserve(first.size() + second.size() + 3);
  seq.tokens.push_back(kClsToken);
  seq.tokens.insert(seq.tokens.end(), first.begin(), first.end());
  seq.tokens.push_back(kSepToken);
  const std::size_t seg0_len = seq.tokens.size();
  seq.tokens.insert(seq.tokens.end(), second.begin(), second.end());
  seq.tokens.push_back(kSepToken);
  seq.segment_ids.assign(seq.tokens.size(), 1);
  for (std::size_t i = 0; i < seg0_len; ++i) seq.segment_ids[i] = 0;
  return seq;
}

}  // namespace

InputSequence build_src_mt(const QERecord& record, const Tokenizer& tok, int max_len) {
  return assemble_two_segment(tok.apply(record.translation), tok.apply(record.source),
                              InputSetting::SrcMt, record.id, max_len);
}

InputSequence build_mt(const QERecord& record, const Tokenizer& tok, int max_len) {
  if (max_len < 3)
    throw QEError(ErrorCode::InvalidConfig, "max_len must be at least 3");
  std::vector<std::string> t = tok.apply(record.translation);
  if (static_cast<int>(t.size()) > max_len - 2) t.resize(max_len - 2);
  InputSequence seq;
  seq.origin = InputSetting::Mt;
  seq.record_id = record.id;
  seq.tokens.reserve(t.size() + 2);
  seq.tokens.push_back(kClsToken);
  seq.tokens.insert(seq.tokens.end(), t.begin(), t.end());
  seq.tokens.push_back(kSepToken);
  seq.segment_ids.assign(seq.tokens.size(), 0);
  return seq;
}

const QERecord& sample_partner(const QERecord& record, const Corpus& corpus, double threshold,
                               Rng& rng) {
  if (!record.hter)
    throw QEError(ErrorCode::NoLabels, "record " + std::to_string(record.id) + " has no hter");
  std::vector<const QERecord*> candidates;
  for (const QERecord& other : corpus.records) {
    if (other.id == record.id) continue;
    if (!other.hter)
      throw QEError(ErrorCode::NoLabels,
                    "partner pool record " + std::to_string(other.id) + " has no hter");
    if (std::abs(other.hter->value - record.hter->value) <= threshold)
      candidates.push_back(&other);
  }
  if (candidates.empty())
    throw QEError(ErrorCode::NoCandidate,
                  "no partner within " + std::to_string(threshold) + " of record " +
                      std::to_string(record.id));
  return *candidates[rng.below(candidates.size())];
}

const QERecord& sample_partner_or_nearest(const QERecord& record, const Corpus& corpus,
                                          double threshold, Rng& rng) {
  try {
    return sample_partner(record, corpus, threshold, rng);
  } catch (const QEError& e) {
    if (e.code() != ErrorCode::NoCandidate) throw;
  }
  const QERecord* best = nullptr;
  double best_delta = 0.0;
  for (const QERecord& other : corpus.records) {
    if (other.id == record.id) continue;
    const double delta = std::abs(other.hter->value - record.hter->value);
    if (!best || delta < best_delta) {
      best = &other;
      best_delta = delta;
    }
  }
  if (!best)
    throw QEError(ErrorCode::NoCandidate,
                  "corpus has no record other than " + std::to_string(record.id));
  return *best;
}

InputSequence build_mt_mt(const QERecord& record, const QERecord& partner, const Tokenizer& tok,
                          int max_len) {
  InputSequence seq = assemble_two_segment(tok.apply(record.translation),
                                           tok.apply(partner.translation), InputSetting::MtMt,
                                           record.id, max_len);
  seq.partner_id = partner.id;
  return seq;
}

void write_audit_tsv(const std::vector<InputSequence>& sequences, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw QEError(ErrorCode::IoError, "cannot write " + path);
  out << "record_id\torigin\tpartner_id\ttokens\tsegment_ids\n";
  for (const InputSequence& seq : sequences) {
    out << seq.record_id << '\t' << to_string(seq.origin) << '\t';
    if (seq.partner_id) out << *seq.partner_id;
    out << '\t';
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      if (i) out << ' ';
      out << seq.tokens[i];
    }
    out << '\t';
    for (std::size_t i = 0; i < seq.segment_ids.size(); ++i) {
      if (i) out << ' ';
      out << seq.segment_ids[i];
    }
    out << '\n';
  }
}

}  // namespace qe
