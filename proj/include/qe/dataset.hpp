#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qe/ter.hpp"
#include "qe/types.hpp"

namespace qe {

// One QE example. Raw strings are kept next to their normalized token
// sequences so file round-trips stay lossless.
struct QERecord {
  enum class Provenance { Wmt, Pseudo };

  int id = 0;
  std::string source_raw;
  std::string translation_raw;
  std::optional<std::string> post_edit_raw;
  TokenSeq source;
  TokenSeq translation;
  std::optional<TokenSeq> post_edit;
  std::optional<HTERLabel> hter;
  Provenance provenance = Provenance::Wmt;
  std::string origin_pair;  // language pair this record came from
};

struct Corpus {
  LanguagePair pair;
  Split split = Split::Train;
  std::vector<QERecord> records;

  std::size_t size() const { return records.size(); }
};

// One-sentence-per-line parallel files; line i of every file populates record
// i. pe_path/hter_path may be empty strings to skip those fields. The hter
// file holds one decimal per line; values outside [0, 1] are clamped with a
// warning on stderr.
Corpus load_parallel_files(const std::string& src_path, const std::string& mt_path,
                           const std::string& pe_path, const std::string& hter_path,
                           const LanguagePair& pair, Split split,
                           const NormalizationConfig& norm = {});

// UTF-8 TSV with a header row naming at least src and mt; pe and hter are
// optional columns. Tabs inside fields are unsupported.
Corpus load_tsv(const std::string& path, const LanguagePair& pair, Split split,
                const NormalizationConfig& norm = {});

// Mirror of load_tsv: header "src\tmt\tpe\thter", absent fields as empty
// cells, hter printed with 6 decimals.
void write_tsv(const Corpus& corpus, const std::string& path);

// Recomputes every record's hter from its post-edit. Throws MissingPostEdit
// (with the record id) if any record lacks one.
Corpus relabel(const Corpus& corpus, const ShiftConfig& shift_config = {});

}  // namespace qe
