#include "qe/ter.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

namespace qe {

namespace {

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Joins a token block with an unlikely separator for set membership tests.
std::string join_block(const TokenSeq& seq, int start, int len) {
  std::string out;
  for (int i = start; i < start + len; ++i) {
    if (i > start) out.push_back('\x1f');
    out += seq[i];
  }
  return out;
}

// Moves seq[start, start+len) so that it starts at index dest in the result.
TokenSeq apply_shift(const TokenSeq& seq, int start, int len, int dest) {
  TokenSeq rest;
  rest.reserve(seq.size());
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    if (i < start || i >= start + len) rest.push_back(seq[i]);
  }
  TokenSeq out;
  out.reserve(seq.size());
  out.insert(out.end(), rest.begin(), rest.begin() + dest);
  out.insert(out.end(), seq.begin() + start, seq.begin() + start + len);
  out.insert(out.end(), rest.begin() + dest, rest.end());
  return out;
}

struct EditBreakdown {
  int insertions = 0;
  int deletions = 0;
  int substitutions = 0;
};

// Full DP with backtrace. Path preference on ties: diagonal, then deletion
// (consume hyp token), then insertion (consume ref token) — fixed so the
// breakdown is deterministic.
EditBreakdown edit_breakdown(const TokenSeq& hyp, const TokenSeq& ref) {
  const int n = static_cast<int>(hyp.size());
  const int m = static_cast<int>(ref.size());
  std::vector<int> dp(static_cast<std::size_t>(n + 1) * (m + 1));
  auto at = [&](int i, int j) -> int& { return dp[static_cast<std::size_t>(i) * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const int sub = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      const int del = at(i - 1, j) + 1;
      const int ins = at(i, j - 1) + 1;
      at(i, j) = std::min({sub, del, ins});
    }
  }
  EditBreakdown out;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int diag = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      if (diag == at(i, j)) {
        if (hyp[i - 1] != ref[j - 1]) ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i - 1, j) + 1 == at(i, j)) {
      ++out.deletions;
      --i;
      continue;
    }
    ++out.insertions;
    --j;
  }
  return out;
}

}  // namespace

TokenSeq normalize(std::string_view raw_text, const NormalizationConfig& config) {
  TokenSeq tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char raw : raw_text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (is_space(c)) {
      flush();
      continue;
    }
    if (config.split_punctuation && is_punct(c)) {
      flush();
      tokens.emplace_back(1, raw);
      continue;
    }
    if (config.lowercase && c < 0x80) c = static_cast<unsigned char>(std::tolower(c));
    current.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

int edit_distance(const TokenSeq& hyp, const TokenSeq& ref) {
  const int n = static_cast<int>(hyp.size());
  const int m = static_cast<int>(ref.size());
  std::vector<int> prev(m + 1), cur(m + 1);
  for (int j = 0; j <= m; ++j) prev[j] = j;
  for (int i = 1; i <= n; ++i) {
    cur[0] = i;
    for (int j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

TERAlignment compute_ter(const TokenSeq& hyp, const TokenSeq& ref, const ShiftConfig& config) {
  TokenSeq current = hyp;
  int current_ed = edit_distance(current, ref);
  int shifts = 0;

  if (config.max_block_size > 0 && !ref.empty()) {
    // All contiguous reference subsequences up to the block-size limit.
    std::unordered_set<std::string> ref_blocks;
    const int m = static_cast<int>(ref.size());
    for (int len = 1; len <= std::min(config.max_block_size, m); ++len) {
      for (int start = 0; start + len <= m; ++start) {
        ref_blocks.insert(join_block(ref, start, len));
      }
    }

    while (current_ed > 0) {
      const int n = static_cast<int>(current.size());
      int best_reduction = 0;
      TokenSeq best_seq;
      for (int start = 0; start < n; ++start) {
        const int max_len = std::min(config.max_block_size, n - start);
        for (int len = 1; len <= max_len; ++len) {
          if (!ref_blocks.count(join_block(current, start, len))) continue;
          for (int dest = 0; dest <= n - len; ++dest) {
            if (dest == start) continue;
            if (std::abs(dest - start) > config.max_shift_distance) continue;
            TokenSeq candidate = apply_shift(current, start, len, dest);
            const int reduction = current_ed - edit_distance(candidate, ref);
            // Strict > keeps the first candidate in iteration order among
            // ties: smallest start, then block size, then destination.
            if (reduction > best_reduction) {
              best_reduction = reduction;
              best_seq = std::move(candidate);
            }
          }
        }
      }
      if (best_reduction < 1) break;
      current = std::move(best_seq);
      current_ed -= best_reduction;
      ++shifts;
    }
  }

  const EditBreakdown residual = edit_breakdown(current, ref);
  TERAlignment out;
  out.insertions = residual.insertions;
  out.deletions = residual.deletions;
  out.substitutions = residual.substitutions;
  out.shifts = shifts;
  out.ref_length = static_cast<int>(ref.size());
  out.score = static_cast<double>(out.total_edits()) / std::max(out.ref_length, 1);
  return out;
}

HTERLabel compute_hter(const TokenSeq& mt, const TokenSeq& post_edit, const ShiftConfig& config) {
  return HTERLabel::clamped(compute_ter(mt, post_edit, config).score);
}

std::string ter_report_line(const TERAlignment& alignment) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "Score: %.6f (%d/%d)", alignment.score,
                alignment.total_edits(), alignment.ref_length);
  return buf;
}

}  // namespace qe
