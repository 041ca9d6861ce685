#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "comprof/corpus.hpp"
#include "comprof/model.hpp"
#include "comprof/rng.hpp"

namespace comprof {

/// Everything needed to serve a trained model or to continue training it.
/// The byte layout is described in the README.
struct Snapshot {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t users = 0;
  std::uint64_t documents = 0;
  std::uint64_t words = 0;
  std::uint64_t friendships = 0;
  std::uint64_t diffusions = 0;

  Hyperparams hyper;
  AblationConfig ablation;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::vector<Rng::State> rngs;  // main stream first, then one per worker

  std::vector<std::uint32_t> community;
  std::vector<std::uint32_t> topic;
  std::vector<double> lambda;
  std::vector<double> delta;

  ModelParams params;  // read-out estimates

  Matrix pi_sum;
  Matrix theta_sum;
  Matrix phi_sum;
  std::uint64_t samples = 0;

  Vocabulary vocabulary;

  bool operator==(const Snapshot& other) const;
};

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot);
/// Throws Error on a bad magic, an unsupported version, a payload that does
/// not match the header dimensions, or trailing bytes.
Snapshot decode_snapshot(std::span<const std::uint8_t> bytes);

void save_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot load_snapshot(const std::filesystem::path& path);

}  // namespace comprof
