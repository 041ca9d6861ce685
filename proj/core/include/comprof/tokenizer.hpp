#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace comprof {

/// Lowercases, splits on non-alphanumerics and keeps "#hashtag" as one token.
/// Bytes >= 0x80 are treated as word characters so UTF-8 words survive intact.
class Tokenizer {
 public:
  Tokenizer();  // built-in English stopword list
  explicit Tokenizer(std::unordered_set<std::string> stopwords);

  static Tokenizer without_stopwords() { return Tokenizer(std::unordered_set<std::string>{}); }
  static std::unordered_set<std::string> default_stopwords();
  static std::unordered_set<std::string> load_stopwords(const std::string& path);

  std::vector<std::string> tokenize(std::string_view text) const;

 private:
  std::unordered_set<std::string> stopwords_;
};

}  // namespace comprof
