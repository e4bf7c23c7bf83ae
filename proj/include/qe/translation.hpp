#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <tuple>

#include "qe/types.hpp"

namespace qe {

// Append-only TSV cache of machine translations, one request per line:
// source_lang, target_lang, source text, translated text. Tabs and newlines
// inside texts are folded to spaces so the file stays one-line-per-entry.
class TranslationCache {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  // Loads existing entries from path (missing file = empty cache). An empty
  // path keeps the cache memory-only.
  explicit TranslationCache(std::string path);

  std::optional<std::string> lookup(const std::string& source_lang,
                                    const std::string& target_lang,
                                    const std::string& text) const;

  // Stores the pair in memory and appends it to the backing file. Replaces
  // nothing: the first stored translation for a key wins.
  void insert(const std::string& source_lang, const std::string& target_lang,
              const std::string& text, const std::string& translation);

  std::size_t size() const { return entries_.size(); }
  const std::string& path() const { return path_; }

  static std::string sanitize(const std::string& text);

 private:
  std::string path_;
  std::map<Key, std::string> entries_;
};

// Translates text between languages. Implementations must be deterministic
// given their cache contents; live_calls() counts requests that actually
// left the process (always 0 for the mock).
class TranslationClient {
 public:
  virtual ~TranslationClient() = default;

  virtual std::string translate(const std::string& source_lang, const std::string& target_lang,
                                const std::string& text) = 0;
  virtual int live_calls() const = 0;
};

// Cache-only client for offline runs and tests: a lookup miss is a
// ClientFailure rather than a network request.
class FileBackedMockClient : public TranslationClient {
 public:
  explicit FileBackedMockClient(const std::string& cache_path);

  std::string translate(const std::string& source_lang, const std::string& target_lang,
                        const std::string& text) override;
  int live_calls() const override { return 0; }

  TranslationCache& cache() { return cache_; }

 private:
  TranslationCache cache_;
};

struct HttpClientConfig {
  std::string host = "localhost";
  int port = 80;
  std::string endpoint = "/translate";
  double requests_per_second = 1.0;
  int max_retries = 3;
  std::string cache_path;
};

// Live client: checks the cache first, otherwise POSTs
// {"q": text, "source": lang, "target": lang} to the endpoint and expects
// {"translation": "..."} back. Every response is cached before being
// returned. Requests are rate-limited and retried with exponential backoff;
// exhausted retries raise ClientFailure.
class HttpTranslationClient : public TranslationClient {
 public:
  explicit HttpTranslationClient(const HttpClientConfig& config);

  std::string translate(const std::string& source_lang, const std::string& target_lang,
                        const std::string& text) override;
  int live_calls() const override { return live_calls_; }

  TranslationCache& cache() { return cache_; }

 private:
  void wait_for_rate_limit();

  HttpClientConfig config_;
  TranslationCache cache_;
  int live_calls_ = 0;
  std::chrono::steady_clock::time_point last_request_{};
  bool any_request_ = false;
};

}  // namespace qe
