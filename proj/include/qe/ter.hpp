#pragma once

#include <string>
#include <string_view>

#include "qe/types.hpp"

namespace qe {

struct NormalizationConfig {
  bool lowercase = true;
  bool split_punctuation = true;
};

// Limits for the greedy block-shift search. max_block_size == 0 disables
// shifts entirely, reducing TER to the plain edit-distance ratio.
struct ShiftConfig {
  int max_block_size = 10;
  int max_shift_distance = 50;
};

// Edit-operation breakdown for one hypothesis/reference pair.
// score == (insertions + deletions + substitutions + shifts) / max(ref_length, 1).
struct TERAlignment {
  int insertions = 0;
  int deletions = 0;
  int substitutions = 0;
  int shifts = 0;
  int ref_length = 0;
  double score = 0.0;

  int total_edits() const { return insertions + deletions + substitutions + shifts; }
};

// Lowercases (ASCII only, so UTF-8 multibyte sequences pass through), splits
// punctuation characters into their own tokens, and tokenizes on whitespace.
// Deterministic for a fixed config; empty input yields an empty sequence.
TokenSeq normalize(std::string_view raw_text, const NormalizationConfig& config = {});

// Word-level Levenshtein distance with unit insert/delete/substitute costs.
int edit_distance(const TokenSeq& hyp, const TokenSeq& ref);

// Translation Edit Rate via greedy block-shift search: repeatedly apply the
// block shift giving the largest reduction in remaining edit distance (ties
// broken by smaller start index, then smaller block size, then smaller
// destination), each shift costing one edit, until no shift reduces the
// distance. The shifted block must match a contiguous reference subsequence
// and respect the config limits.
TERAlignment compute_ter(const TokenSeq& hyp, const TokenSeq& ref, const ShiftConfig& config = {});

// Sentence-level HTER: TER of the translation against its post-edit, clamped
// to [0, 1].
HTERLabel compute_hter(const TokenSeq& mt, const TokenSeq& post_edit,
                       const ShiftConfig& config = {});

// One line of the tercom-style text report: "Score: <score> (<edits>/<ref_len>)".
std::string ter_report_line(const TERAlignment& alignment);

}  // namespace qe
