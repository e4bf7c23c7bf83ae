#include "qe/dataset.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qe {

namespace {

// Structural UTF-8 check; overlong forms and surrogates are rejected.
bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    unsigned long cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (extra == 1 && cp < 0x80) return false;
    if (extra == 2 && cp < 0x800) return false;
    if (extra == 3 && cp < 0x10000) return false;
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw QEError(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!valid_utf8(line))
      throw QEError(ErrorCode::ParseError,
                    path + ": invalid UTF-8 on line " + std::to_string(lines.size() + 1));
    lines.push_back(std::move(line));
  }
  return lines;
}

double parse_hter(const std::string& text, const std::string& path, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  // Trailing whitespace is tolerated; anything else is a parse error.
  while (end && *end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
  if (end == text.c_str() || (end && *end != '\0') || errno == ERANGE)
    throw QEError(ErrorCode::ParseError, path + ": non-numeric HTER value \"" + text +
                                             "\" on line " + std::to_string(line_no));
  if (value < 0.0 || value > 1.0)
    std::cerr << "warning: " << path << " line " << line_no << ": HTER " << value
              << " outside [0,1], clamping\n";
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

Corpus load_parallel_files(const std::string& src_path, const std::string& mt_path,
                           const std::string& pe_path, const std::string& hter_path,
                           const LanguagePair& pair, Split split,
                           const NormalizationConfig& norm) {
  pair.validate();
  const auto src_lines = read_lines(src_path);
  const auto mt_lines = read_lines(mt_path);
  if (src_lines.size() != mt_lines.size())
    throw QEError(ErrorCode::LineCountMismatch,
                  src_path + " has " + std::to_string(src_lines.size()) + " lines, " + mt_path +
                      " has " + std::to_string(mt_lines.size()));
  std::vector<std::string> pe_lines, hter_lines;
  if (!pe_path.empty()) {
    pe_lines = read_lines(pe_path);
    if (pe_lines.size() != src_lines.size())
      throw QEError(ErrorCode::LineCountMismatch, pe_path + " line count differs from " + src_path);
  }
  if (!hter_path.empty()) {
    hter_lines = read_lines(hter_path);
    if (hter_lines.size() != src_lines.size())
      throw QEError(ErrorCode::LineCountMismatch,
                    hter_path + " line count differs from " + src_path);
  }

  Corpus corpus{pair, split, {}};
  corpus.records.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    QERecord rec;
    rec.id = static_cast<int>(i);
    rec.source_raw = src_lines[i];
    rec.translation_raw = mt_lines[i];
    rec.source = normalize(rec.source_raw, norm);
    rec.translation = normalize(rec.translation_raw, norm);
    if (!pe_lines.empty()) {
      rec.post_edit_raw = pe_lines[i];
      rec.post_edit = normalize(pe_lines[i], norm);
    }
    if (!hter_lines.empty())
      rec.hter = HTERLabel::clamped(parse_hter(hter_lines[i], hter_path, i + 1));
    rec.origin_pair = pair.name();
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

Corpus load_tsv(const std::string& path, const LanguagePair& pair, Split split,
                const NormalizationConfig& norm) {
  pair.validate();
  const auto lines = read_lines(path);
  if (lines.empty()) throw QEError(ErrorCode::ParseError, path + ": missing header row");
  const auto header = split_tabs(lines[0]);
  int src_col = -1, mt_col = -1, pe_col = -1, hter_col = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == "src") src_col = c;
    else if (header[c] == "mt") mt_col = c;
    else if (header[c] == "pe") pe_col = c;
    else if (header[c] == "hter") hter_col = c;
  }
  if (src_col < 0) throw QEError(ErrorCode::MissingColumn, path + ": no \"src\" column");
  if (mt_col < 0) throw QEError(ErrorCode::MissingColumn, path + ": no \"mt\" column");

  Corpus corpus{pair, split, {}};
  corpus.records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != header.size())
      throw QEError(ErrorCode::ParseError, path + ": expected " + std::to_string(header.size()) +
                                               " columns but found " +
                                               std::to_string(fields.size()) + " on line " +
                                               std::to_string(i + 1));
    QERecord rec;
    rec.id = static_cast<int>(i - 1);
    rec.source_raw = fields[src_col];
    rec.translation_raw = fields[mt_col];
    rec.source = normalize(rec.source_raw, norm);
    rec.translation = normalize(rec.translation_raw, norm);
    if (pe_col >= 0 && pe_col < static_cast<int>(fields.size()) && !fields[pe_col].empty()) {
      rec.post_edit_raw = fields[pe_col];
      rec.post_edit = normalize(*rec.post_edit_raw, norm);
    }
    if (hter_col >= 0 && hter_col < static_cast<int>(fields.size()) && !fields[hter_col].empty())
      rec.hter = HTERLabel::clamped(parse_hter(fields[hter_col], path, i + 1));
    rec.origin_pair = pair.name();
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

void write_tsv(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw QEError(ErrorCode::IoError, "cannot write " + path);
  out << "src\tmt\tpe\thter\n";
  char buf[32];
  for (const QERecord& rec : corpus.records) {
    out << rec.source_raw << '\t' << rec.translation_raw << '\t';
    if (rec.post_edit_raw) out << *rec.post_edit_raw;
    out << '\t';
    if (rec.hter) {
      std::snprintf(buf, sizeof(buf), "%.6f", rec.hter->value);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw QEError(ErrorCode::IoError, "failed writing " + path);
}

Corpus relabel(const Corpus& corpus, const ShiftConfig& shift_config) {
  Corpus out = corpus;
  for (QERecord& rec : out.records) {
    if (!rec.post_edit)
      throw QEError(ErrorCode::MissingPostEdit,
                    "record " + std::to_string(rec.id) + " has no post-edit");
    rec.hter = compute_hter(rec.translation, *rec.post_edit, shift_config);
  }
  return out;
}

}  // namespace qe
