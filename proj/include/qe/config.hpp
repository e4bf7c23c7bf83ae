#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qe/ensemble.hpp"
#include "qe/predictor.hpp"
#include "qe/ter.hpp"
#include "qe/types.hpp"
#include "qe/zero_shot.hpp"

namespace qe {

// Resolved settings for one CLI run. Parsed from a flat key=value file
// ('#' starts a comment, unknown keys are errors) and echoed back in a fixed
// order as the output manifest, so a manifest is itself a valid config file
// and reruns resolve to the same settings.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir;

  std::string pair = "en-de";  // source-target of the working corpus
  std::string data_train;
  std::string data_dev;
  std::vector<InputSetting> settings = {InputSetting::SrcMt, InputSetting::Mt,
                                        InputSetting::MtMt};

  std::string tokenizer_mode = "whitespace";  // whitespace | wordpiece
  std::string tokenizer_vocab;
  int builder_max_len = kDefaultMaxLen;
  double partner_threshold = 0.1;

  EncoderSpec encoder;
  TrainConfig train;

  EnsembleKind ensemble_kind = EnsembleKind::Gbrt;
  int ensemble_folds = 10;
  GBRTConfig gbrt;
  AdaBoostR2Config adaboost;

  ShiftConfig ter;

  std::string zero_shot_test_pair;
  std::string zero_shot_corpora;  // comma list of src-tgt:path entries
  std::string zero_shot_cache;
  double zero_shot_dev_fraction = 0.1;
  std::string zero_shot_on_failure = "abort";  // abort | skip
  std::string zero_shot_client = "mock";       // mock | http
  std::string zero_shot_http_host = "localhost";
  int zero_shot_http_port = 80;
  std::string zero_shot_http_endpoint = "/translate";
  double zero_shot_rps = 1.0;
  int zero_shot_max_retries = 3;

  static RunConfig from_file(const std::string& path);
  void apply(const std::string& key, const std::string& value);

  // Every key with its resolved value, in canonical manifest order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  void write_manifest(const std::string& path) const;

  LanguagePair parsed_pair() const;
  Tokenizer make_tokenizer() const;
  BuilderConfig make_builder() const;
  StackConfig make_stack() const;

  // (pair, path) entries from zero_shot_corpora.
  std::vector<std::pair<LanguagePair, std::string>> parsed_corpora() const;
  LanguagePair parsed_test_pair() const;
};

InputSetting setting_from_string(const std::string& name);
LanguagePair pair_from_string(const std::string& text);

}  // namespace qe
