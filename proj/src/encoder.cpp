#include "qe/encoder.hpp"

#include <fstream>
#include <sstream>

namespace qe {

HashedBagEncoder::HashedBagEncoder(int buckets, int dim, double init_scale,
                                   std::uint64_t init_seed)
    : buckets_(buckets), dim_(dim), init_scale_(init_scale), init_seed_(init_seed) {
  if (buckets <= 0 || dim <= 0)
    throw QEError(ErrorCode::InvalidConfig, "encoder buckets and dim must be positive");
  table_ = initial_table(buckets, dim, init_scale, init_seed);
}

Matrix HashedBagEncoder::initial_table(int buckets, int dim, double init_scale,
                                       std::uint64_t init_seed) {
  Matrix table(dim, buckets);
  Rng rng(init_seed);
  for (int c = 0; c < buckets; ++c)
    for (int r = 0; r < dim; ++r) table(r, c) = rng.uniform(-init_scale, init_scale);
  return table;
}

std::map<int, int> HashedBagEncoder::bucket_counts(const std::vector<std::string>& tokens) const {
  std::map<int, int> counts;
  for (const std::string& token : tokens) ++counts[token_bucket(token, buckets_)];
  return counts;
}

EncoderOutput HashedBagEncoder::encode(const std::vector<std::string>& tokens,
                                       bool with_per_token) const {
  EncoderOutput out;
  out.h_cls = Vector::Zero(dim_);
  if (tokens.empty()) return out;
  for (const auto& [bucket, count] : bucket_counts(tokens))
    out.h_cls += static_cast<double>(count) * table_.col(bucket);
  out.h_cls /= static_cast<double>(tokens.size());
  if (with_per_token) {
    out.per_token.emplace();
    out.per_token->reserve(tokens.size());
    for (const std::string& token : tokens)
      out.per_token->push_back(table_.col(token_bucket(token, buckets_)));
  }
  return out;
}

FileEmbeddingEncoder::FileEmbeddingEncoder(int dim, std::map<Key, Vector> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
  for (const auto& [key, vec] : vectors_) {
    if (vec.size() != dim_)
      throw QEError(ErrorCode::ShapeMismatch,
                    "vector for record " + std::to_string(key.first) + " has dimension " +
                        std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  }
}

FileEmbeddingEncoder FileEmbeddingEncoder::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw QEError(ErrorCode::IoError, "cannot open " + path);
  std::map<Key, Vector> vectors;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id_text, origin_text, floats_text;
    if (!std::getline(fields, id_text, '\t') || !std::getline(fields, origin_text, '\t') ||
        !std::getline(fields, floats_text))
      throw QEError(ErrorCode::ParseError,
                    path + ": expected 3 tab-separated fields on line " + std::to_string(line_no));
    InputSetting origin;
    if (origin_text == "SRC_MT") origin = InputSetting::SrcMt;
    else if (origin_text == "MT") origin = InputSetting::Mt;
    else if (origin_text == "MT_MT") origin = InputSetting::MtMt;
    else
      throw QEError(ErrorCode::ParseError,
                    path + ": unknown origin \"" + origin_text + "\" on line " +
                        std::to_string(line_no));
    std::istringstream floats(floats_text);
    std::vector<double> values;
    double v;
    while (floats >> v) values.push_back(v);
    if (values.empty())
      throw QEError(ErrorCode::ParseError, path + ": no values on line " + std::to_string(line_no));
    if (dim < 0) dim = static_cast<int>(values.size());
    Vector vec = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    vectors.emplace(Key{std::stoi(id_text), origin}, std::move(vec));
  }
  if (dim < 0) throw QEError(ErrorCode::ParseError, path + " holds no vectors");
  return FileEmbeddingEncoder(dim, std::move(vectors));
}

const Vector& FileEmbeddingEncoder::encode(int record_id, InputSetting origin) const {
  auto it = vectors_.find({record_id, origin});
  if (it == vectors_.end())
    throw QEError(ErrorCode::ParseError, "no embedding for record " + std::to_string(record_id) +
                                             " origin " + to_string(origin));
  return it->second;
}

}  // namespace qe
