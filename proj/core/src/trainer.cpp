#include "comprof/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "comprof/error.hpp"
#include "comprof/eval.hpp"
#include "comprof/polya_gamma.hpp"
#include "comprof/snapshot.hpp"

namespace comprof {
namespace {

using Clock = std::chrono::steady_clock;

void add_into(Matrix& sum, const Matrix& value) {
  for (std::size_t k = 0; k < sum.data.size(); ++k) sum.data[k] += value.data[k];
}

Matrix averaged(const Matrix& sum, std::uint64_t samples) {
  Matrix out = sum;
  for (auto& x : out.data) x /= static_cast<double>(samples);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// nu regression

NuObjective::NuObjective(std::vector<NuSample> samples) : samples_(std::move(samples)) {
  NuVector sq{};
  for (const auto& s : samples_) {
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] += s.features[k] * s.features[k];
  }
  for (std::size_t k = 0; k < sq.size(); ++k) {
    const double rms = samples_.empty() ? 0.0 : std::sqrt(sq[k] / static_cast<double>(samples_.size()));
    scale_[k] = rms > 1e-12 ? rms : 1.0;
  }
}

double NuObjective::value(const NuVector& nu) const {
  if (samples_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples_) {
    double x = s.offset;
    for (std::size_t k = 0; k < nu.size(); ++k) x += nu[k] * s.features[k];
    total -= s.label > 0.5 ? log_sigmoid(x) : log_sigmoid(-x);
  }
  return total / static_cast<double>(samples_.size());
}

NuVector NuObjective::gradient(const NuVector& nu) const {
  NuVector g{};
  if (samples_.empty()) return g;
  for (const auto& s : samples_) {
    double x = s.offset;
    for (std::size_t k = 0; k < nu.size(); ++k) x += nu[k] * s.features[k];
    const double r = sigmoid(x) - s.label;
    for (std::size_t k = 0; k < nu.size(); ++k) g[k] += r * s.features[k];
  }
  for (auto& x : g) x /= static_cast<double>(samples_.size());
  return g;
}

NuVector fit_nu(const NuObjective& objective, const NuVector& start, std::size_t steps,
                double learning_rate) {
  NuVector nu = start;
  const auto& scale = objective.feature_scale();
  for (std::size_t step = 0; step < steps; ++step) {
    const auto g = objective.gradient(nu);
    for (std::size_t k = 0; k < nu.size(); ++k) {
      nu[k] -= learning_rate * g[k] / (scale[k] * scale[k]);
      if (!std::isfinite(g[k]) || !std::isfinite(nu[k])) {
        throw Error("nu regression diverged at step " + std::to_string(step) +
                    "; try a smaller learning rate");
      }
    }
  }
  return nu;
}

std::vector<NuSample> nu_samples(const GibbsSampler& sampler, const LatentState& state,
                                 const PairFeatures& features, const LinkParams& params,
                                 double negative_ratio, Rng& rng) {
  const auto& graph = sampler.graph();
  const auto& ablation = sampler.ablation();
  const std::size_t C = state.num_communities;
  const Matrix pi = estimate_pi(state, graph, sampler.hyper());
  const Matrix theta = estimate_theta(state, sampler.hyper());
  std::vector<double> a(C), b(C);

  auto offset = [&](DocId i, DocId j, Bucket t) {
    const UserId u = graph.document(i).owner, v = graph.document(j).owner;
    if (!ablation.heterogeneity) return dot(pi.row(u), pi.row(v));
    const std::uint32_t z = state.topic[i];
    for (std::size_t c = 0; c < C; ++c) {
      a[c] = theta(c, z) * pi(u, c);
      b[c] = theta(c, z) * pi(v, c);
    }
    double x = community_term(a, b, params.eta, z);
    if (ablation.topic) x += params.popularity.score(z, t);
    return x;
  };

  std::vector<NuSample> samples;
  const auto edges = graph.diffusions();
  const auto negatives = static_cast<std::size_t>(std::llround(negative_ratio * static_cast<double>(edges.size())));
  samples.reserve(edges.size() + negatives);
  for (const auto& e : edges) {
    samples.push_back({offset(e.src, e.dst, e.bucket),
                       features.pair(graph.document(e.src).owner, graph.document(e.dst).owner), 1.0});
  }
  const std::size_t D = graph.num_documents();
  if (D < 2) return samples;
  std::size_t drawn = 0;
  for (std::size_t attempt = 0; drawn < negatives && attempt < 100 * negatives + 100; ++attempt) {
    const auto i = static_cast<DocId>(rng.below(D));
    const auto j = static_cast<DocId>(rng.below(D));
    if (i == j || graph.has_diffusion(i, j)) continue;
    samples.push_back({offset(i, j, graph.document(i).bucket),
                       features.pair(graph.document(i).owner, graph.document(j).owner), 0.0});
    ++drawn;
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Trainer

void TrainReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "iteration,log_joint,perplexity,estep_seconds,mstep_seconds,topic_moves,community_moves\n";
  out.precision(17);
  for (const auto& r : iterations) {
    out << r.iteration << ',' << r.log_joint << ',' << r.perplexity << ',' << r.estep_seconds << ','
        << r.mstep_seconds << ',' << r.topic_moves << ',' << r.community_moves << '\n';
  }
}

Trainer::Trainer(const SocialGraph& graph, const TrainConfig& config, ResumeTag)
    : graph_(graph), config_(config), features_(graph), rng_(config.seed, 0) {
  config_.hyper.validate();
  if (config_.workers == 0) throw Error("worker count must be positive");
  if (!config_.ablation.individual) link_.nu = {};
  sampler_ = std::make_unique<GibbsSampler>(graph_, features_, config_.hyper, config_.ablation);
  const std::size_t C = config_.hyper.communities, Z = config_.hyper.topics;
  pi_sum_ = Matrix(graph_.num_users(), C);
  theta_sum_ = Matrix(C, Z);
  phi_sum_ = Matrix(Z, graph_.num_words());
}

Trainer::Trainer(const SocialGraph& graph, const TrainConfig& config)
    : Trainer(graph, config, ResumeTag{}) {
  const std::size_t C = config_.hyper.communities, Z = config_.hyper.topics;
  state_ = LatentState::random(graph_, C, Z, rng_);
  link_.eta = EtaTensor::uniform(C, Z);
  link_.popularity = topic_popularity(state_.topic, Z, graph_, config_.hyper.popularity_transform);
  sampler_->set_params(link_);
  setup_workers();
}

Trainer::~Trainer() = default;

std::unique_ptr<Trainer> Trainer::resume(const SocialGraph& graph, const Snapshot& snap,
                                         std::size_t workers) {
  if (snap.users != graph.num_users() || snap.documents != graph.num_documents() ||
      snap.words != graph.num_words() || snap.friendships != graph.num_friendships() ||
      snap.diffusions != graph.num_diffusions()) {
    throw Error("snapshot dimensions do not match the graph");
  }
  TrainConfig config;
  config.hyper = snap.hyper;
  config.ablation = snap.ablation;
  config.seed = snap.seed;
  config.workers = workers;
  std::unique_ptr<Trainer> t(new Trainer(graph, config, ResumeTag{}));
  t->state_ = LatentState::from_assignments(graph, snap.hyper.communities, snap.hyper.topics,
                                            snap.community, snap.topic, snap.lambda, snap.delta);
  t->link_.eta = snap.params.eta;
  t->link_.nu = snap.params.nu;
  t->link_.popularity = snap.params.popularity;
  t->sampler_->set_params(t->link_);
  t->iteration_ = snap.iteration;
  t->pi_sum_ = snap.pi_sum;
  t->theta_sum_ = snap.theta_sum;
  t->phi_sum_ = snap.phi_sum;
  t->samples_ = snap.samples;
  if (snap.rngs.empty()) throw Error("snapshot carries no random stream");
  t->rng_ = Rng::from_state(snap.rngs[0]);
  t->setup_workers();
  if (snap.rngs.size() == workers + 1 && workers > 1) {
    for (std::size_t m = 0; m < workers; ++m) t->worker_rngs_[m] = Rng::from_state(snap.rngs[m + 1]);
  }
  return t;
}

void Trainer::setup_workers() {
  const std::size_t M = config_.workers;
  worker_rngs_.clear();
  parallel_.reset();
  if (M <= 1) return;
  Rng base(config_.seed, 1);
  for (std::size_t m = 0; m < M; ++m) worker_rngs_.push_back(base.split(m));

  Rng seg_rng(config_.seed, 2);
  segments_ = segment_users(graph_, config_.hyper.topics, seg_rng, config_.lda_sweeps);
  LatentState probe = state_;
  Rng probe_rng(config_.seed, 3);
  SweepOptions opts = sweep_options();
  opts.compute_log_joint = false;
  const auto calib = sampler_->sweep(probe, probe_rng, opts);
  const auto workload = estimate_workload(segments_, ItemCosts::from_sweep(calib));
  const auto alloc = allocate(workload.per_segment, M);
  parallel_ = std::make_unique<ParallelSweeper>(*sampler_, segments_, alloc);
}

SweepOptions Trainer::sweep_options() const {
  SweepOptions opts;
  opts.compute_log_joint = config_.compute_log_joint;
  if (!config_.ablation.joint) {
    if (iteration_ < config_.hyper.iterations / 2) {
      opts.sample_topics = false;
      opts.community_content_terms = false;
      opts.diffusion_terms = false;
    } else {
      opts.sample_communities = false;
    }
  }
  return opts;
}

void Trainer::m_step() {
  const std::size_t Z = config_.hyper.topics;
  link_.eta = estimate_eta(state_, graph_);
  link_.popularity = topic_popularity(state_.topic, Z, graph_, config_.hyper.popularity_transform);
  sampler_->set_params(link_);
  if (config_.ablation.individual && config_.ablation.heterogeneity && graph_.num_diffusions() > 0) {
    NuObjective objective(
        nu_samples(*sampler_, state_, features_, link_, config_.hyper.negative_ratio, rng_));
    link_.nu = fit_nu(objective, link_.nu, config_.hyper.nu_steps, config_.hyper.learning_rate);
    sampler_->set_params(link_);
  }
}

const IterationRecord& Trainer::step() {
  if (done()) throw Error("training already finished");
  const SweepOptions opts = sweep_options();
  const SweepStats stats =
      parallel_ ? parallel_->sweep(state_, worker_rngs_, opts) : sampler_->sweep(state_, rng_, opts);

  const auto t0 = Clock::now();
  m_step();
  IterationRecord rec;
  rec.iteration = iteration_;
  rec.log_joint = stats.log_joint;
  rec.estep_seconds = stats.seconds;
  rec.topic_moves = stats.topic_moves;
  rec.community_moves = stats.community_moves;

  const bool readout = iteration_ >= config_.hyper.burn_in_value();
  if (readout || config_.track_perplexity) {
    const Matrix pi = estimate_pi(state_, graph_, config_.hyper);
    const Matrix theta = estimate_theta(state_, config_.hyper);
    const Matrix phi = estimate_phi(state_, config_.hyper);
    if (config_.track_perplexity) rec.perplexity = perplexity(graph_, pi, theta, phi);
    if (readout) {
      add_into(pi_sum_, pi);
      add_into(theta_sum_, theta);
      add_into(phi_sum_, phi);
      ++samples_;
    }
  }
  rec.mstep_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  ++iteration_;
  report_.iterations.push_back(rec);
  if (parallel_) report_.worker_seconds = parallel_->worker_seconds();
  return report_.iterations.back();
}

const TrainReport& Trainer::run() {
  while (!done()) step();
  return report_;
}

ModelParams Trainer::current_params() const {
  ModelParams p;
  p.pi = estimate_pi(state_, graph_, config_.hyper);
  p.theta = estimate_theta(state_, config_.hyper);
  p.phi = estimate_phi(state_, config_.hyper);
  p.eta = link_.eta;
  p.nu = link_.nu;
  p.popularity = link_.popularity;
  return p;
}

ModelParams Trainer::params() const {
  if (samples_ == 0) return current_params();
  ModelParams p;
  p.pi = averaged(pi_sum_, samples_);
  p.theta = averaged(theta_sum_, samples_);
  p.phi = averaged(phi_sum_, samples_);
  p.eta = link_.eta;
  p.nu = link_.nu;
  p.popularity = link_.popularity;
  return p;
}

Snapshot Trainer::snapshot(const Vocabulary& vocabulary) const {
  Snapshot s;
  s.users = graph_.num_users();
  s.documents = graph_.num_documents();
  s.words = graph_.num_words();
  s.friendships = graph_.num_friendships();
  s.diffusions = graph_.num_diffusions();
  s.hyper = config_.hyper;
  s.ablation = config_.ablation;
  s.seed = config_.seed;
  s.iteration = iteration_;
  s.rngs.push_back(rng_.state());
  for (const auto& r : worker_rngs_) s.rngs.push_back(r.state());
  s.community = state_.community;
  s.topic = state_.topic;
  s.lambda = state_.lambda;
  s.delta = state_.delta;
  s.params = params();
  s.pi_sum = pi_sum_;
  s.theta_sum = theta_sum_;
  s.phi_sum = phi_sum_;
  s.samples = samples_;
  s.vocabulary = vocabulary;
  return s;
}

TrainResult train(const SocialGraph& graph, const TrainConfig& config) {
  Trainer trainer(graph, config);
  trainer.run();
  return {trainer.state(), trainer.params(), trainer.report()};
}

}  // namespace comprof
