#include "comprof/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "comprof/error.hpp"

namespace comprof {
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'M', 'P', 'R', 'S', 'N', 'A', 'P'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void f64s(const std::vector<T>& v) {
    for (double x : v) f64(x);
  }
  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error("snapshot is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(in_[pos_ + k]) << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

struct Dims {
  std::uint64_t U, D, W, F, E, C, Z;
  std::int64_t B;
};

std::uint64_t payload_bytes(const Dims& d) {
  const std::uint64_t matrices = d.U * d.C + d.C * d.Z + d.Z * d.W;
  const std::uint64_t ZB = d.Z * static_cast<std::uint64_t>(d.B);
  return 8 * d.D + 8 * (d.F + d.E) + 8 * (matrices + d.C * d.C * d.Z + PairFeatures::kDim) +
         16 * ZB + 8 * matrices + 8;
}

std::uint8_t ablation_bits(const AblationConfig& a) {
  return static_cast<std::uint8_t>((a.joint ? 1 : 0) | (a.heterogeneity ? 2 : 0) |
                                   (a.individual ? 4 : 0) | (a.topic ? 8 : 0));
}

Matrix read_matrix(Reader& in, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  m.data = in.f64s(rows * cols);
  return m;
}

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows != rows || m.cols != cols) {
    throw Error(std::string("snapshot field ") + name + " has the wrong shape");
  }
}

}  // namespace

bool Snapshot::operator==(const Snapshot& o) const {
  if (rngs.size() != o.rngs.size()) return false;
  for (std::size_t k = 0; k < rngs.size(); ++k) {
    const auto &a = rngs[k], &b = o.rngs[k];
    if (a.seed != b.seed || a.stream != b.stream || a.counter != b.counter || a.index != b.index) {
      return false;
    }
  }
  return users == o.users && documents == o.documents && words == o.words &&
         friendships == o.friendships && diffusions == o.diffusions && hyper == o.hyper &&
         ablation == o.ablation && seed == o.seed && iteration == o.iteration &&
         community == o.community && topic == o.topic && lambda == o.lambda && delta == o.delta &&
         params == o.params && pi_sum == o.pi_sum && theta_sum == o.theta_sum &&
         phi_sum == o.phi_sum && samples == o.samples && vocabulary == o.vocabulary;
}

std::vector<std::uint8_t> encode_snapshot(const Snapshot& s) {
  const std::size_t C = s.hyper.communities, Z = s.hyper.topics;
  const Dims dims{s.users, s.documents, s.words, s.friendships, s.diffusions, C, Z,
                  s.params.popularity.buckets()};
  if (s.community.size() != s.documents || s.topic.size() != s.documents ||
      s.lambda.size() != s.friendships || s.delta.size() != s.diffusions) {
    throw Error("snapshot assignments do not match its dimensions");
  }
  check_matrix(s.params.pi, s.users, C, "pi");
  check_matrix(s.params.theta, C, Z, "theta");
  check_matrix(s.params.phi, Z, s.words, "phi");
  check_matrix(s.pi_sum, s.users, C, "pi_sum");
  check_matrix(s.theta_sum, C, Z, "theta_sum");
  check_matrix(s.phi_sum, Z, s.words, "phi_sum");
  if (s.params.eta.communities() != C || s.params.eta.topics() != Z) {
    throw Error("snapshot field eta has the wrong shape");
  }
  if (s.params.popularity.topics() != Z) throw Error("snapshot popularity has the wrong shape");
  if (s.vocabulary.size() != s.words) throw Error("snapshot vocabulary does not match its word count");

  Writer out;
  out.bytes(kMagic.data(), kMagic.size());
  out.u32(Snapshot::kVersion);
  out.u64(s.users);
  out.u64(s.documents);
  out.u64(s.words);
  out.u64(s.friendships);
  out.u64(s.diffusions);
  out.u64(C);
  out.u64(Z);
  out.f64(s.hyper.alpha);
  out.f64(s.hyper.rho);
  out.f64(s.hyper.beta);
  out.u64(s.hyper.iterations);
  out.u64(s.hyper.nu_steps);
  out.f64(s.hyper.learning_rate);
  out.f64(s.hyper.negative_ratio);
  out.u64(s.hyper.burn_in);
  out.u8(static_cast<std::uint8_t>(s.hyper.popularity_transform));
  out.u8(ablation_bits(s.ablation));
  out.u64(s.seed);
  out.u64(s.iteration);
  out.i32(s.params.popularity.buckets());
  out.u32(static_cast<std::uint32_t>(s.rngs.size()));
  for (const auto& r : s.rngs) {
    out.u64(r.seed);
    out.u64(r.stream);
    out.u64(r.counter);
    out.u32(r.index);
  }
  out.u64(payload_bytes(dims));

  const std::size_t start = out.size();
  for (auto c : s.community) out.u32(c);
  for (auto z : s.topic) out.u32(z);
  out.f64s(s.lambda);
  out.f64s(s.delta);
  out.f64s(s.params.pi.data);
  out.f64s(s.params.theta.data);
  out.f64s(s.params.phi.data);
  out.f64s(s.params.eta.data());
  for (double x : s.params.nu) out.f64(x);
  for (auto n : s.params.popularity.counts()) out.i64(n);
  out.f64s(s.params.popularity.scores());
  out.f64s(s.pi_sum.data);
  out.f64s(s.theta_sum.data);
  out.f64s(s.phi_sum.data);
  out.u64(s.samples);
  if (out.size() - start != payload_bytes(dims)) throw Error("snapshot encoder size mismatch");

  out.u64(s.vocabulary.size());
  for (const auto& w : s.vocabulary.words()) {
    out.u32(static_cast<std::uint32_t>(w.size()));
    out.bytes(w.data(), w.size());
  }
  return std::move(out.buffer());
}

Snapshot decode_snapshot(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw Error("not a model snapshot (bad magic)");
  const auto version = in.u32();
  if (version != Snapshot::kVersion) {
    throw Error("unsupported snapshot version " + std::to_string(version) + " (expected " +
                std::to_string(Snapshot::kVersion) + ")");
  }
  Snapshot s;
  s.users = in.u64();
  s.documents = in.u64();
  s.words = in.u64();
  s.friendships = in.u64();
  s.diffusions = in.u64();
  s.hyper.communities = in.u64();
  s.hyper.topics = in.u64();
  s.hyper.alpha = in.f64();
  s.hyper.rho = in.f64();
  s.hyper.beta = in.f64();
  s.hyper.iterations = in.u64();
  s.hyper.nu_steps = in.u64();
  s.hyper.learning_rate = in.f64();
  s.hyper.negative_ratio = in.f64();
  s.hyper.burn_in = in.u64();
  const auto transform = in.u8();
  if (transform > static_cast<std::uint8_t>(PopularityTransform::kLog1pMinMax)) {
    throw Error("snapshot has an unknown popularity transform");
  }
  s.hyper.popularity_transform = static_cast<PopularityTransform>(transform);
  const auto bits = in.u8();
  s.ablation = {(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0};
  s.seed = in.u64();
  s.iteration = in.u64();
  const Bucket buckets = in.i32();
  if (buckets < 0) throw Error("snapshot has a negative bucket count");
  const auto nrng = in.u32();
  for (std::uint32_t k = 0; k < nrng; ++k) {
    Rng::State r;
    r.seed = in.u64();
    r.stream = in.u64();
    r.counter = in.u64();
    r.index = in.u32();
    s.rngs.push_back(r);
  }
  const std::size_t C = s.hyper.communities, Z = s.hyper.topics;
  const Dims dims{s.users, s.documents, s.words, s.friendships, s.diffusions, C, Z, buckets};
  const auto declared = in.u64();
  if (C == 0 || Z == 0 || declared != payload_bytes(dims) || declared > in.remaining()) {
    throw Error("snapshot payload does not match its header dimensions");
  }

  s.community.resize(s.documents);
  s.topic.resize(s.documents);
  for (auto& c : s.community) c = in.u32();
  for (auto& z : s.topic) z = in.u32();
  for (std::size_t d = 0; d < s.documents; ++d) {
    if (s.community[d] >= C || s.topic[d] >= Z) throw Error("snapshot assignment out of range");
  }
  s.lambda = in.f64s(s.friendships);
  s.delta = in.f64s(s.diffusions);
  s.params.pi = read_matrix(in, s.users, C);
  s.params.theta = read_matrix(in, C, Z);
  s.params.phi = read_matrix(in, Z, s.words);
  s.params.eta = EtaTensor(C, Z);
  s.params.eta.data() = in.f64s(C * C * Z);
  for (auto& x : s.params.nu) x = in.f64();
  TopicPopularity pop(Z, buckets, s.hyper.popularity_transform);
  for (std::size_t z = 0; z < Z; ++z) {
    for (Bucket t = 0; t < buckets; ++t) pop.add(static_cast<std::uint32_t>(z), t, in.i64());
  }
  pop.refresh();
  const auto scores = in.f64s(Z * static_cast<std::size_t>(buckets));
  if (scores != pop.scores()) throw Error("snapshot popularity scores are inconsistent with counts");
  s.params.popularity = std::move(pop);
  s.pi_sum = read_matrix(in, s.users, C);
  s.theta_sum = read_matrix(in, C, Z);
  s.phi_sum = read_matrix(in, Z, s.words);
  s.samples = in.u64();

  const auto nwords = in.u64();
  if (nwords != s.words) throw Error("snapshot vocabulary does not match its word count");
  for (std::uint64_t k = 0; k < nwords; ++k) {
    const auto len = in.u32();
    if (len > in.remaining()) throw Error("snapshot is truncated");
    std::string w(len, '\0');
    in.bytes(w.data(), len);
    if (s.vocabulary.add(w) != k) throw Error("snapshot vocabulary has a duplicate word");
  }
  if (in.remaining() != 0) throw Error("snapshot has trailing bytes");
  return s;
}

void save_snapshot(const std::filesystem::path& path, const Snapshot& snapshot) {
  const auto bytes = encode_snapshot(snapshot);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace comprof
