#include "qe/translation.hpp"

#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace qe {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::string TranslationCache::sanitize(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

TranslationCache::TranslationCache(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  if (!in) return;  // first run: the file appears on the first insert
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != 4) {
      throw QEError(ErrorCode::ParseError, path_ + ":" + std::to_string(line_no) +
                                               ": expected 4 tab-separated fields, got " +
                                               std::to_string(cells.size()));
    }
    entries_.emplace(Key{cells[0], cells[1], cells[2]}, cells[3]);
  }
}

std::optional<std::string> TranslationCache::lookup(const std::string& source_lang,
                                                    const std::string& target_lang,
                                                    const std::string& text) const {
  const auto it = entries_.find(Key{source_lang, target_lang, sanitize(text)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void TranslationCache::insert(const std::string& source_lang, const std::string& target_lang,
                              const std::string& text, const std::string& translation) {
  const Key key{source_lang, target_lang, sanitize(text)};
  const auto [it, inserted] = entries_.emplace(key, sanitize(translation));
  if (!inserted || path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw QEError(ErrorCode::IoError, "cannot append to translation cache " + path_);
  out << std::get<0>(key) << '\t' << std::get<1>(key) << '\t' << std::get<2>(key) << '\t'
      << it->second << '\n';
}

FileBackedMockClient::FileBackedMockClient(const std::string& cache_path) : cache_(cache_path) {}

std::string FileBackedMockClient::translate(const std::string& source_lang,
                                            const std::string& target_lang,
                                            const std::string& text) {
  const auto hit = cache_.lookup(source_lang, target_lang, text);
  if (!hit) {
    throw QEError(ErrorCode::ClientFailure, "mock translator has no cached " + source_lang + "->" +
                                                target_lang + " entry for: " +
                                                TranslationCache::sanitize(text));
  }
  return *hit;
}

HttpTranslationClient::HttpTranslationClient(const HttpClientConfig& config)
    : config_(config), cache_(config.cache_path) {
  if (config_.requests_per_second <= 0.0) {
    throw QEError(ErrorCode::InvalidConfig, "requests_per_second must be positive");
  }
  if (config_.max_retries < 0) {
    throw QEError(ErrorCode::InvalidConfig, "max_retries must be non-negative");
  }
}

void HttpTranslationClient::wait_for_rate_limit() {
  const auto min_gap = std::chrono::duration<double>(1.0 / config_.requests_per_second);
  if (any_request_) {
    const auto next_allowed = last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(min_gap);
    const auto now = std::chrono::steady_clock::now();
    if (now < next_allowed) std::this_thread::sleep_for(next_allowed - now);
  }
  last_request_ = std::chrono::steady_clock::now();
  any_request_ = true;
}

std::string HttpTranslationClient::translate(const std::string& source_lang,
                                             const std::string& target_lang,
                                             const std::string& text) {
  const auto hit = cache_.lookup(source_lang, target_lang, text);
  if (hit) return *hit;

  const nlohmann::json body = {
      {"q", text}, {"source", source_lang}, {"target", target_lang}};
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(500 * (1LL << (attempt - 1))));
    }
    wait_for_rate_limit();
    ++live_calls_;
    httplib::Client http(config_.host, config_.port);
    const httplib::Result res = http.Post(config_.endpoint, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      const nlohmann::json parsed = nlohmann::json::parse(res->body);
      const std::string translation = parsed.at("translation").get<std::string>();
      cache_.insert(source_lang, target_lang, text, translation);
      return translation;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("bad response body: ") + e.what();
    }
  }
  throw QEError(ErrorCode::ClientFailure,
                "translation request failed after " + std::to_string(config_.max_retries + 1) +
                    " attempts (" + last_error + ")");
}

}  // namespace qe
