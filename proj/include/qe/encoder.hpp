#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qe/rng.hpp"
#include "qe/types.hpp"

namespace qe {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct EncoderOutput {
  Vector h_cls;
  std::optional<std::vector<Vector>> per_token;
};

// Desk-scale stand-in for a deep sentence encoder: every token (markers
// included) hashes into one of V buckets and h_cls is the mean of the bucket
// embeddings. The table is learnable; columns are embeddings.
class HashedBagEncoder {
 public:
  HashedBagEncoder(int buckets, int dim, double init_scale, std::uint64_t init_seed);

  static int token_bucket(std::string_view token, int buckets) {
    return static_cast<int>(fnv1a64(token) % static_cast<std::uint64_t>(buckets));
  }

  EncoderOutput encode(const std::vector<std::string>& tokens, bool with_per_token = false) const;

  // Bucket index -> multiplicity, ascending by bucket; total is the token
  // count. Shared by the forward pass and backpropagation.
  std::map<int, int> bucket_counts(const std::vector<std::string>& tokens) const;

  int buckets() const { return buckets_; }
  int dim() const { return dim_; }
  double init_scale() const { return init_scale_; }
  std::uint64_t init_seed() const { return init_seed_; }

  Matrix& table() { return table_; }
  const Matrix& table() const { return table_; }

  // Scale factor accumulated on never-updated columns by decoupled weight
  // decay; lets checkpoints reconstruct untouched columns from the init seed.
  double untouched_scale() const { return untouched_scale_; }
  void set_untouched_scale(double s) { untouched_scale_ = s; }

  // The initial table for (buckets, dim, scale, seed); used by checkpointing
  // to store only columns that training actually changed.
  static Matrix initial_table(int buckets, int dim, double init_scale, std::uint64_t init_seed);

 private:
  int buckets_;
  int dim_;
  double init_scale_;
  std::uint64_t init_seed_;
  double untouched_scale_ = 1.0;
  Matrix table_;  // dim x buckets
};

// Looks up externally computed sentence vectors by (record_id, origin);
// lookups must be total over the corpus the table was built for.
class FileEmbeddingEncoder {
 public:
  using Key = std::pair<int, InputSetting>;

  FileEmbeddingEncoder(int dim, std::map<Key, Vector> vectors);

  // TSV rows: record_id, origin name, d space-separated floats.
  static FileEmbeddingEncoder load_tsv(const std::string& path);

  const Vector& encode(int record_id, InputSetting origin) const;

  int dim() const { return dim_; }
  const std::map<Key, Vector>& vectors() const { return vectors_; }

 private:
  int dim_;
  std::map<Key, Vector> vectors_;
};

}  // namespace qe
