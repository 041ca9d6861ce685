#include <gtest/gtest.h>

#include <cstring>

#include "comprof/error.hpp"
#include "comprof/snapshot.hpp"
#include "comprof/trainer.hpp"
#include "helpers.hpp"

using namespace comprof;
using namespace testing_helpers;

namespace {

struct Trained {
  SocialGraph graph;
  Vocabulary vocab;
  Snapshot snap;
};

Trained trained() {
  Rng rng(80, 0);
  Trained t{random_graph(8, 20, 12, 15, 10, rng), {}, {}};
  for (int w = 0; w < 12; ++w) t.vocab.add("word" + std::to_string(w));
  TrainConfig c;
  c.hyper.communities = 2;
  c.hyper.topics = 3;
  c.hyper.iterations = 4;
  c.lda_sweeps = 2;
  Trainer tr(t.graph, c);
  tr.run();
  t.snap = tr.snapshot(t.vocab);
  return t;
}

std::string decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_snapshot(bytes);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Snapshot, RoundTripIsExact) {
  const auto t = trained();
  const auto bytes = encode_snapshot(t.snap);
  const auto back = decode_snapshot(bytes);
  EXPECT_TRUE(back == t.snap);
  EXPECT_EQ(encode_snapshot(back), bytes);

  const auto path = temp_dir("snapshot") / "m.snap";
  save_snapshot(path, t.snap);
  EXPECT_TRUE(load_snapshot(path) == t.snap);
}

TEST(Snapshot, RejectsBadMagic) {
  auto bytes = encode_snapshot(trained().snap);
  bytes[0] ^= 0xff;
  EXPECT_NE(decode_error(bytes).find("bad magic"), std::string::npos);
}

TEST(Snapshot, RejectsOtherVersions) {
  auto bytes = encode_snapshot(trained().snap);
  bytes[8] = 7;
  EXPECT_NE(decode_error(bytes).find("unsupported snapshot version 7"), std::string::npos);
}

TEST(Snapshot, RejectsTruncationAtEveryLength) {
  const auto bytes = encode_snapshot(trained().snap);
  for (std::size_t n = 0; n < bytes.size(); n += 1 + n / 8) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_FALSE(decode_error(cut).empty()) << "length " << n;
  }
}

TEST(Snapshot, RejectsTrailingBytes) {
  auto bytes = encode_snapshot(trained().snap);
  bytes.push_back(0);
  EXPECT_NE(decode_error(bytes).find("trailing"), std::string::npos);
}

TEST(Snapshot, RejectsHeaderPayloadMismatch) {
  auto bytes = encode_snapshot(trained().snap);
  // users is the first u64 after magic and version.
  std::uint64_t users;
  std::memcpy(&users, bytes.data() + 12, 8);
  users += 1;
  std::memcpy(bytes.data() + 12, &users, 8);
  EXPECT_NE(decode_error(bytes).find("header dimensions"), std::string::npos);
}

TEST(Snapshot, EncoderRejectsInconsistentShapes) {
  auto snap = trained().snap;
  snap.topic.pop_back();
  EXPECT_THROW(encode_snapshot(snap), Error);
}

TEST(Snapshot, MissingFileNamesPath) {
  try {
    load_snapshot("/nonexistent/model.snap");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/model.snap"), std::string::npos);
  }
}

TEST(Snapshot, ResumeRejectsForeignGraph) {
  const auto t = trained();
  Rng rng(81, 0);
  const auto other = random_graph(9, 20, 12, 15, 10, rng);
  EXPECT_THROW(Trainer::resume(other, t.snap), Error);
}
