#include "comprof/tokenizer.hpp"

#include <fstream>

#include "comprof/error.hpp"

namespace comprof {
namespace {

bool is_word_byte(unsigned char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
         ch >= 0x80;
}

char lower(unsigned char ch) {
  return (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : static_cast<char>(ch);
}

}  // namespace

Tokenizer::Tokenizer() : stopwords_(default_stopwords()) {}

Tokenizer::Tokenizer(std::unordered_set<std::string> stopwords)
    : stopwords_(std::move(stopwords)) {}

std::unordered_set<std::string> Tokenizer::default_stopwords() {
  return {"a",     "about", "after", "all",   "also",  "am",    "an",    "and",   "any",
          "are",   "as",    "at",    "be",    "been",  "being", "but",   "by",    "can",
          "could", "did",   "do",    "does",  "for",   "from",  "had",   "has",   "have",
          "he",    "her",   "him",   "his",   "how",   "i",     "if",    "in",    "into",
          "is",    "it",    "its",   "just",  "me",    "more",  "most",  "my",    "no",
          "not",   "of",    "on",    "one",   "only",  "or",    "other", "our",   "out",
          "over",  "rt",    "she",   "so",    "some",  "such",  "than",  "that",  "the",
          "their", "them",  "then",  "there", "these", "they",  "this",  "those", "to",
          "too",   "up",    "us",    "very",  "was",   "we",    "were",  "what",  "when",
          "where", "which", "while", "who",   "why",   "will",  "with",  "would", "you",
          "your"};
}

std::unordered_set<std::string> Tokenizer::load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stopword file " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string word;
    for (unsigned char ch : line) {
      if (is_word_byte(ch)) word.push_back(lower(ch));
    }
    if (!word.empty()) words.insert(word);
  }
  return words;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current != "#" && !stopwords_.contains(current)) {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto ch = static_cast<unsigned char>(text[i]);
    if (is_word_byte(ch)) {
      current.push_back(lower(ch));
    } else if (ch == '#' && current.empty() && i + 1 < text.size() &&
               is_word_byte(static_cast<unsigned char>(text[i + 1]))) {
      current.push_back('#');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace comprof
