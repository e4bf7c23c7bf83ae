#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qe/dataset.hpp"
#include "qe/rng.hpp"
#include "qe/tokenizer.hpp"
#include "qe/types.hpp"

namespace qe {

inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr int kDefaultMaxLen = 512;

// Marker-delimited token sequence for one of the three input settings.
// tokens[0] is always [CLS] and the last token [SEP]; segment ids are 0 up to
// and including the first [SEP] and 1 afterwards.
struct InputSequence {
  std::vector<std::string> tokens;
  std::vector<int> segment_ids;
  InputSetting origin = InputSetting::Mt;
  int record_id = 0;
  std::optional<int> partner_id;
};

// [CLS] t [SEP] s [SEP] — translation first. When the combined length
// exceeds max_len, tokens are trimmed from the tail of the longer segment
// first (second segment first on ties, which then alternates), keeping at
// least one content token per originally non-empty segment.
InputSequence build_src_mt(const QERecord& record, const Tokenizer& tok,
                           int max_len = kDefaultMaxLen);

// [CLS] t [SEP].
InputSequence build_mt(const QERecord& record, const Tokenizer& tok, int max_len = kDefaultMaxLen);

// Uniformly random partner with |partner.hter - record.hter| <= threshold,
// excluding the record itself. Throws NoCandidate when the filter is empty.
const QERecord& sample_partner(const QERecord& record, const Corpus& corpus, double threshold,
                               Rng& rng);

// sample_partner with the NoCandidate fallback: nearest |Δhter|, smallest id
// on ties.
const QERecord& sample_partner_or_nearest(const QERecord& record, const Corpus& corpus,
                                          double threshold, Rng& rng);

// [CLS] t [SEP] t' [SEP]; the partner id is recorded for reproducibility.
InputSequence build_mt_mt(const QERecord& record, const QERecord& partner, const Tokenizer& tok,
                          int max_len = kDefaultMaxLen);

// Audit dump: record_id, origin, partner_id, space-joined tokens,
// space-joined segment ids.
void write_audit_tsv(const std::vector<InputSequence>& sequences, const std::string& path);

}  // namespace qe
