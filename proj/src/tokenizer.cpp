#include "qe/tokenizer.hpp"

#include <fstream>

namespace qe {

std::vector<std::string> Tokenizer::apply(const TokenSeq& words) const {
  if (mode == Mode::Whitespace) return words;
  if (vocab.empty())
    throw QEError(ErrorCode::InvalidConfig, "wordpiece mode requires a vocabulary");

  std::vector<std::string> out;
  out.reserve(words.size());
  for (const std::string& word : words) {
    if (static_cast<int>(word.size()) > max_word_chars) {
      out.push_back(unk_token);
      continue;
    }
    std::vector<std::string> pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::string match;
      while (start < end) {
        std::string candidate = word.substr(start, end - start);
        if (start > 0) candidate = "##" + candidate;
        if (vocab.count(candidate)) {
          match = std::move(candidate);
          break;
        }
        --end;
      }
      if (match.empty()) {
        bad = true;
        break;
      }
      pieces.push_back(std::move(match));
      start = end;
    }
    if (bad) {
      out.push_back(unk_token);
    } else {
      out.insert(out.end(), pieces.begin(), pieces.end());
    }
  }
  return out;
}

Tokenizer Tokenizer::wordpiece_from_file(const std::string& vocab_path, const std::string& unk) {
  std::ifstream in(vocab_path);
  if (!in) throw QEError(ErrorCode::IoError, "cannot open vocabulary " + vocab_path);
  Tokenizer tok;
  tok.mode = Mode::Wordpiece;
  tok.unk_token = unk;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tok.vocab.insert(line);
  }
  if (tok.vocab.empty())
    throw QEError(ErrorCode::InvalidConfig, vocab_path + " holds an empty vocabulary");
  return tok;
}

}  // namespace qe
