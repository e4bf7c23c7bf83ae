#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "qe/types.hpp"

namespace qe {

// Second-stage tokenization applied to normalized word tokens. Whitespace
// mode passes words through unchanged; wordpiece mode segments each word by
// greedy longest-match-first lookup, with "##" marking continuations and the
// unk token standing in for unsegmentable words.
struct Tokenizer {
  enum class Mode { Whitespace, Wordpiece };

  Mode mode = Mode::Whitespace;
  std::unordered_set<std::string> vocab;
  std::string unk_token = "[UNK]";
  int max_word_chars = 100;

  std::vector<std::string> apply(const TokenSeq& words) const;

  // One vocabulary entry per line.
  static Tokenizer wordpiece_from_file(const std::string& vocab_path,
                                       const std::string& unk = "[UNK]");
};

}  // namespace qe
