#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qe/dataset.hpp"
#include "qe/translation.hpp"
#include "qe/types.hpp"

namespace qe {

// A record paired with a machine-made stand-in reference and the edit-rate
// label of its translation against that stand-in.
struct PseudoReferenceRecord {
  QERecord base;
  LanguagePair origin;
  std::string pseudo_reference_raw;
  TokenSeq pseudo_reference;
  HTERLabel hter_vs_pseudo{0.0};
};

// Corpora whose target language matches the test pair's, the test pair
// itself excluded. Throws NoRelevantPairs when nothing qualifies.
std::vector<Corpus> select_relevant_pairs(const std::vector<Corpus>& available,
                                          const LanguagePair& test_pair);

enum class ClientFailurePolicy {
  Abort,  // first failed record aborts the whole batch
  Skip,   // failed records are dropped, the rest proceed
};

// One pseudo-reference per corpus record via the client, normalized like any
// reference and labeled by the edit rate of the record's translation against
// it. Failures follow the policy; Abort rethrows with the record id.
std::vector<PseudoReferenceRecord> generate_pseudo_references(
    const Corpus& corpus, TranslationClient& client, const NormalizationConfig& norm = {},
    const ShiftConfig& shift = {}, ClientFailurePolicy policy = ClientFailurePolicy::Abort);

// Single training corpus: every original record, plus one extra record per
// pseudo entry whose label is hter_vs_pseudo and whose reference slot holds
// the pseudo-reference. Ids are reassigned contiguously from 0; provenance
// and origin pair are stamped per record. All inputs must share one target
// language (TargetLangMismatch otherwise).
Corpus merge_for_zero_shot(const std::vector<Corpus>& originals,
                           const std::vector<PseudoReferenceRecord>& pseudo);

// Seeded-shuffle split into (train, dev); dev gets floor(n * dev_fraction)
// records. Both halves keep corpus order and record ids.
std::pair<Corpus, Corpus> split_for_dev(const Corpus& merged, double dev_fraction,
                                        std::uint64_t seed);

}  // namespace qe
