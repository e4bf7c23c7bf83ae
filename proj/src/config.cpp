#include "qe/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "qe/checkpoint.hpp"
#include "qe/rng.hpp"

namespace qe {
namespace {

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw QEError(ErrorCode::InvalidConfig, key + ": '" + value + "' is not an integer");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw QEError(ErrorCode::InvalidConfig,
                  key + ": '" + value + "' is not a non-negative integer");
  }
}

double parse_num(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw QEError(ErrorCode::InvalidConfig, key + ": '" + value + "' is not a number");
  }
}

std::string settings_to_string(const std::vector<InputSetting>& settings) {
  std::string out;
  for (const InputSetting s : settings) {
    if (!out.empty()) out += ',';
    switch (s) {
      case InputSetting::SrcMt: out += "srcmt"; break;
      case InputSetting::Mt: out += "mt"; break;
      case InputSetting::MtMt: out += "mtmt"; break;
    }
  }
  return out;
}

}  // namespace

InputSetting setting_from_string(const std::string& name) {
  const std::string n = lower(name);
  if (n == "srcmt" || n == "src_mt" || n == "src-mt") return InputSetting::SrcMt;
  if (n == "mt") return InputSetting::Mt;
  if (n == "mtmt" || n == "mt_mt" || n == "mt-mt") return InputSetting::MtMt;
  throw QEError(ErrorCode::InvalidConfig,
                "unknown input setting '" + name + "' (expected srcmt, mt, or mtmt)");
}

LanguagePair pair_from_string(const std::string& text) {
  const std::size_t dash = text.find('-');
  if (dash == std::string::npos) {
    throw QEError(ErrorCode::InvalidConfig,
                  "'" + text + "' is not a language pair (expected e.g. en-de)");
  }
  LanguagePair pair{text.substr(0, dash), text.substr(dash + 1)};
  pair.validate();
  return pair;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw QEError(ErrorCode::IoError, "cannot read config " + path);
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      throw QEError(ErrorCode::InvalidConfig,
                    path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    config.apply(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
  }
  return config;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "pair") pair = lower(value);
  else if (key == "data.train") data_train = value;
  else if (key == "data.dev") data_dev = value;
  else if (key == "settings") {
    settings.clear();
    std::istringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
      if (!trim(item).empty()) settings.push_back(setting_from_string(trim(item)));
    }
    if (settings.empty()) throw QEError(ErrorCode::InvalidConfig, "settings list is empty");
  } else if (key == "tokenizer.mode") {
    tokenizer_mode = lower(value);
    if (tokenizer_mode != "whitespace" && tokenizer_mode != "wordpiece") {
      throw QEError(ErrorCode::InvalidConfig,
                    "tokenizer.mode must be whitespace or wordpiece, got '" + value + "'");
    }
  } else if (key == "tokenizer.vocab") tokenizer_vocab = value;
  else if (key == "builder.max_len") builder_max_len = parse_int(key, value);
  else if (key == "builder.partner_threshold") partner_threshold = parse_num(key, value);
  else if (key == "encoder.kind") {
    const std::string kind = lower(value);
    if (kind == "hashed") encoder.kind = EncoderSpec::Kind::HashedBag;
    else if (kind == "file") encoder.kind = EncoderSpec::Kind::File;
    else {
      throw QEError(ErrorCode::InvalidConfig,
                    "encoder.kind must be hashed or file, got '" + value + "'");
    }
  } else if (key == "encoder.buckets") encoder.buckets = parse_int(key, value);
  else if (key == "encoder.dim") encoder.dim = parse_int(key, value);
  else if (key == "encoder.init_scale") encoder.init_scale = parse_num(key, value);
  else if (key == "encoder.init_seed") encoder.init_seed = parse_u64(key, value);
  else if (key == "encoder.vectors") encoder.vectors_path = value;
  else if (key == "train.epochs") train.epochs = parse_int(key, value);
  else if (key == "train.batch_size") train.batch_size = parse_int(key, value);
  else if (key == "train.learning_rate") train.learning_rate = parse_num(key, value);
  else if (key == "train.weight_decay") train.weight_decay = parse_num(key, value);
  else if (key == "train.beta1") train.beta1 = parse_num(key, value);
  else if (key == "train.beta2") train.beta2 = parse_num(key, value);
  else if (key == "train.epsilon") train.epsilon = parse_num(key, value);
  else if (key == "ensemble.kind") ensemble_kind = ensemble_kind_from_string(lower(value));
  else if (key == "ensemble.folds") ensemble_folds = parse_int(key, value);
  else if (key == "gbrt.n_estimators") gbrt.n_estimators = parse_int(key, value);
  else if (key == "gbrt.learning_rate") gbrt.learning_rate = parse_num(key, value);
  else if (key == "gbrt.min_samples_split") gbrt.min_samples_split = parse_int(key, value);
  else if (key == "gbrt.max_depth") gbrt.max_depth = parse_int(key, value);
  else if (key == "adaboost.n_estimators") adaboost.n_estimators = parse_int(key, value);
  else if (key == "adaboost.learning_rate") adaboost.learning_rate = parse_num(key, value);
  else if (key == "adaboost.min_samples_split") adaboost.min_samples_split = parse_int(key, value);
  else if (key == "adaboost.max_depth") adaboost.max_depth = parse_int(key, value);
  else if (key == "ter.max_block_size") ter.max_block_size = parse_int(key, value);
  else if (key == "ter.max_shift_distance") ter.max_shift_distance = parse_int(key, value);
  else if (key == "zero_shot.test_pair") zero_shot_test_pair = lower(value);
  else if (key == "zero_shot.corpora") zero_shot_corpora = value;
  else if (key == "zero_shot.cache") zero_shot_cache = value;
  else if (key == "zero_shot.dev_fraction") zero_shot_dev_fraction = parse_num(key, value);
  else if (key == "zero_shot.on_failure") {
    zero_shot_on_failure = lower(value);
    if (zero_shot_on_failure != "abort" && zero_shot_on_failure != "skip") {
      throw QEError(ErrorCode::InvalidConfig,
                    "zero_shot.on_failure must be abort or skip, got '" + value + "'");
    }
  } else if (key == "zero_shot.client") {
    zero_shot_client = lower(value);
    if (zero_shot_client != "mock" && zero_shot_client != "http") {
      throw QEError(ErrorCode::InvalidConfig,
                    "zero_shot.client must be mock or http, got '" + value + "'");
    }
  } else if (key == "zero_shot.http_host") zero_shot_http_host = value;
  else if (key == "zero_shot.http_port") zero_shot_http_port = parse_int(key, value);
  else if (key == "zero_shot.http_endpoint") zero_shot_http_endpoint = value;
  else if (key == "zero_shot.rps") zero_shot_rps = parse_num(key, value);
  else if (key == "zero_shot.max_retries") zero_shot_max_retries = parse_int(key, value);
  else {
    throw QEError(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("out_dir", out_dir);
  kv.emplace_back("pair", pair);
  kv.emplace_back("data.train", data_train);
  kv.emplace_back("data.dev", data_dev);
  kv.emplace_back("settings", settings_to_string(settings));
  kv.emplace_back("tokenizer.mode", tokenizer_mode);
  kv.emplace_back("tokenizer.vocab", tokenizer_vocab);
  kv.emplace_back("builder.max_len", std::to_string(builder_max_len));
  kv.emplace_back("builder.partner_threshold", format_exact(partner_threshold));
  kv.emplace_back("encoder.kind",
                  encoder.kind == EncoderSpec::Kind::HashedBag ? "hashed" : "file");
  kv.emplace_back("encoder.buckets", std::to_string(encoder.buckets));
  kv.emplace_back("encoder.dim", std::to_string(encoder.dim));
  kv.emplace_back("encoder.init_scale", format_exact(encoder.init_scale));
  kv.emplace_back("encoder.init_seed", std::to_string(encoder.init_seed));
  kv.emplace_back("encoder.vectors", encoder.vectors_path);
  kv.emplace_back("train.epochs", std::to_string(train.epochs));
  kv.emplace_back("train.batch_size", std::to_string(train.batch_size));
  kv.emplace_back("train.learning_rate", format_exact(train.learning_rate));
  kv.emplace_back("train.weight_decay", format_exact(train.weight_decay));
  kv.emplace_back("train.beta1", format_exact(train.beta1));
  kv.emplace_back("train.beta2", format_exact(train.beta2));
  kv.emplace_back("train.epsilon", format_exact(train.epsilon));
  kv.emplace_back("ensemble.kind", to_string(ensemble_kind));
  kv.emplace_back("ensemble.folds", std::to_string(ensemble_folds));
  kv.emplace_back("gbrt.n_estimators", std::to_string(gbrt.n_estimators));
  kv.emplace_back("gbrt.learning_rate", format_exact(gbrt.learning_rate));
  kv.emplace_back("gbrt.min_samples_split", std::to_string(gbrt.min_samples_split));
  kv.emplace_back("gbrt.max_depth", std::to_string(gbrt.max_depth));
  kv.emplace_back("adaboost.n_estimators", std::to_string(adaboost.n_estimators));
  kv.emplace_back("adaboost.learning_rate", format_exact(adaboost.learning_rate));
  kv.emplace_back("adaboost.min_samples_split", std::to_string(adaboost.min_samples_split));
  kv.emplace_back("adaboost.max_depth", std::to_string(adaboost.max_depth));
  kv.emplace_back("ter.max_block_size", std::to_string(ter.max_block_size));
  kv.emplace_back("ter.max_shift_distance", std::to_string(ter.max_shift_distance));
  kv.emplace_back("zero_shot.test_pair", zero_shot_test_pair);
  kv.emplace_back("zero_shot.corpora", zero_shot_corpora);
  kv.emplace_back("zero_shot.cache", zero_shot_cache);
  kv.emplace_back("zero_shot.dev_fraction", format_exact(zero_shot_dev_fraction));
  kv.emplace_back("zero_shot.on_failure", zero_shot_on_failure);
  kv.emplace_back("zero_shot.client", zero_shot_client);
  kv.emplace_back("zero_shot.http_host", zero_shot_http_host);
  kv.emplace_back("zero_shot.http_port", std::to_string(zero_shot_http_port));
  kv.emplace_back("zero_shot.http_endpoint", zero_shot_http_endpoint);
  kv.emplace_back("zero_shot.rps", format_exact(zero_shot_rps));
  kv.emplace_back("zero_shot.max_retries", std::to_string(zero_shot_max_retries));
  return kv;
}

void RunConfig::write_manifest(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw QEError(ErrorCode::IoError, "cannot write manifest " + path);
  out << "# resolved run configuration; usable directly as --config\n";
  for (const auto& [key, value] : to_key_values()) out << key << '=' << value << '\n';
  if (!out) throw QEError(ErrorCode::IoError, "write to " + path + " failed");
}

LanguagePair RunConfig::parsed_pair() const { return pair_from_string(pair); }

Tokenizer RunConfig::make_tokenizer() const {
  if (tokenizer_mode == "wordpiece") {
    if (tokenizer_vocab.empty()) {
      throw QEError(ErrorCode::InvalidConfig, "wordpiece tokenizer needs tokenizer.vocab");
    }
    return Tokenizer::wordpiece_from_file(tokenizer_vocab);
  }
  return Tokenizer{};
}

BuilderConfig RunConfig::make_builder() const {
  BuilderConfig builder;
  builder.tokenizer = make_tokenizer();
  builder.max_len = builder_max_len;
  builder.partner_threshold = partner_threshold;
  return builder;
}

StackConfig RunConfig::make_stack() const {
  StackConfig stack;
  stack.folds = ensemble_folds;
  stack.seed = seed;
  stack.kind = ensemble_kind;
  stack.encoder = encoder;
  stack.train = train;
  stack.train.seed = seed;
  stack.gbrt = gbrt;
  stack.adaboost = adaboost;
  stack.adaboost.seed = mix_seed(seed, 0xADAB00u);
  return stack;
}

std::vector<std::pair<LanguagePair, std::string>> RunConfig::parsed_corpora() const {
  std::vector<std::pair<LanguagePair, std::string>> out;
  std::istringstream stream(zero_shot_corpora);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const std::string text = trim(item);
    if (text.empty()) continue;
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
      throw QEError(ErrorCode::InvalidConfig,
                    "zero_shot.corpora entry '" + text + "' is not pair:path");
    }
    out.emplace_back(pair_from_string(lower(text.substr(0, colon))), text.substr(colon + 1));
  }
  if (out.empty()) {
    throw QEError(ErrorCode::InvalidConfig, "zero_shot.corpora lists no corpora");
  }
  return out;
}

LanguagePair RunConfig::parsed_test_pair() const {
  if (zero_shot_test_pair.empty()) {
    throw QEError(ErrorCode::InvalidConfig, "zero_shot.test_pair is not set");
  }
  return pair_from_string(zero_shot_test_pair);
}

}  // namespace qe
