#include <gtest/gtest.h>

#include "comprof/tokenizer.hpp"

using comprof::Tokenizer;

TEST(Tokenizer, LowercasesAndSplitsOnPunctuation) {
  const auto t = Tokenizer::without_stopwords().tokenize("Hello, WORLD!foo-bar 42");
  EXPECT_EQ(t, (std::vector<std::string>{"hello", "world", "foo", "bar", "42"}));
}

TEST(Tokenizer, KeepsHashtagsWhole) {
  const auto t = Tokenizer::without_stopwords().tokenize("new #MachineLearning post #");
  EXPECT_EQ(t, (std::vector<std::string>{"new", "#machinelearning", "post"}));
}

TEST(Tokenizer, DropsStopwords) {
  const auto t = Tokenizer().tokenize("the router and the switch");
  EXPECT_EQ(t, (std::vector<std::string>{"router", "switch"}));
  const auto custom = Tokenizer({"router"}).tokenize("the router");
  EXPECT_EQ(custom, (std::vector<std::string>{"the"}));
}

TEST(Tokenizer, KeepsUtf8Words) {
  const auto t = Tokenizer::without_stopwords().tokenize("café naïve");
  EXPECT_EQ(t, (std::vector<std::string>{"café", "naïve"}));
}

TEST(Tokenizer, EmptyInput) { EXPECT_TRUE(Tokenizer().tokenize("  ,.; ").empty()); }
