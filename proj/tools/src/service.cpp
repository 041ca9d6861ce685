#include "comprof/tools/service.hpp"

#include <charconv>

#include <httplib.h>

#include "comprof/apps.hpp"

namespace comprof::tools {

std::string to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

nlohmann::ordered_json to_json(const JobRecord& job) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = job.id;
  j["kind"] = job.kind;
  j["status"] = to_string(job.status);
  j["artifact"] = job.status == JobStatus::kDone ? nlohmann::ordered_json(job.artifact.string())
                                                : nlohmann::ordered_json(nullptr);
  if (!job.error.empty()) j["error"] = job.error;
  return j;
}

Service::Service(Options options) : options_(std::move(options)) {
  if (options_.jobs_dir.empty()) options_.jobs_dir = std::filesystem::temp_directory_path() / "comprof-jobs";
  worker_ = std::thread([this] { run_jobs(); });
}

Service::~Service() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  if (loader_.joinable()) loader_.join();
  worker_.join();
}

void Service::load_async(std::filesystem::path snapshot, std::filesystem::path graph_dir,
                         IngestOptions ingest) {
  {
    std::lock_guard lock(mutex_);
    if (loading_) throw Error("a model is already loading");
    loading_ = true;
    load_error_.clear();
  }
  if (loader_.joinable()) loader_.join();
  loader_ = std::thread([this, snapshot = std::move(snapshot), graph_dir = std::move(graph_dir), ingest] {
    std::shared_ptr<const ModelBundle> bundle;
    std::string error;
    try {
      bundle = load_bundle(snapshot, graph_dir, ingest);
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(mutex_);
      if (bundle) model_ = std::move(bundle);
      load_error_ = error;
      loading_ = false;
    }
    changed_.notify_all();
  });
}

void Service::set_model(std::shared_ptr<const ModelBundle> model) {
  {
    std::lock_guard lock(mutex_);
    model_ = std::move(model);
  }
  changed_.notify_all();
}

std::shared_ptr<const ModelBundle> Service::model() const {
  std::lock_guard lock(mutex_);
  return loading_ ? nullptr : model_;
}

bool Service::wait_until_loaded() {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [this] { return !loading_; });
  return model_ != nullptr && load_error_.empty();
}

std::optional<JobRecord> Service::job(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

JobRecord Service::submit_train(const nlohmann::json& config) {
  const auto current = model();
  if (!current || !current->graph) throw Error("training jobs need a loaded model with its graph");
  TrainConfig base;
  base.hyper = current->snapshot.hyper;
  base.ablation = current->snapshot.ablation;
  base.seed = current->snapshot.seed;
  TrainConfig parsed = train_config_from_json(config, base);
  std::lock_guard lock(mutex_);
  JobRecord job;
  job.id = next_job_++;
  jobs_[job.id] = job;
  pending_configs_[job.id] = parsed;
  queue_.push_back(job.id);
  changed_.notify_all();
  return job;
}

JobRecord Service::wait_for_job(std::uint64_t id) {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] {
    const auto it = jobs_.find(id);
    return it == jobs_.end() || it->second.status == JobStatus::kDone ||
           it->second.status == JobStatus::kFailed;
  });
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFound("unknown job " + std::to_string(id));
  return it->second;
}

void Service::run_jobs() {
  for (;;) {
    std::uint64_t id;
    TrainConfig config;
    std::shared_ptr<const ModelBundle> model;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      config = pending_configs_.at(id);
      pending_configs_.erase(id);
      jobs_[id].status = JobStatus::kRunning;
      model = model_;
    }
    changed_.notify_all();
    JobRecord result = jobs_.at(id);
    try {
      std::filesystem::create_directories(options_.jobs_dir);
      Trainer trainer(*model->graph, config);
      trainer.run();
      const auto artifact = options_.jobs_dir / ("job-" + std::to_string(id) + ".snap");
      save_snapshot(artifact, trainer.snapshot(model->vocabulary()));
      trainer.report().write_csv(options_.jobs_dir / ("job-" + std::to_string(id) + "-report.csv"));
      result.artifact = artifact;
      result.status = JobStatus::kDone;
    } catch (const std::exception& e) {
      result.status = JobStatus::kFailed;
      result.error = e.what();
    }
    {
      std::lock_guard lock(mutex_);
      jobs_[id] = result;
    }
    changed_.notify_all();
  }
}

namespace {

const char* const kJson = "application/json";

void send(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["error"] = message;
  send(res, status, j.dump());
}

template <typename T>
std::optional<T> parse_integer(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

void Service::mount(httplib::Server& server) {
  // Every model-backed route goes through this: 503 while loading, 404 for
  // unknown ids, 400 for anything else the model rejects.
  auto with_model = [this](auto handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<const ModelBundle> current;
      std::string error;
      {
        std::lock_guard lock(mutex_);
        if (!loading_) current = model_;
        error = loading_ ? "model is loading" : load_error_;
      }
      if (!current) {
        send_error(res, 503, error.empty() ? "no model loaded" : error);
        return;
      }
      try {
        handler(*current, req, res);
      } catch (const NotFound& e) {
        send_error(res, 404, e.what());
      } catch (const std::exception& e) {
        send_error(res, 400, e.what());
      }
    };
  };

  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["status"] = loading_ ? "loading" : model_ ? "ready" : "failed";
    if (!load_error_.empty()) j["error"] = load_error_;
    send(res, 200, j.dump());
  });

  server.Get("/communities", with_model([](const ModelBundle& m, const httplib::Request&, httplib::Response& res) {
    auto j = communities_json(m.params(), m.vocabulary());
    send(res, 200, j.dump());
  }));

  auto profile = with_model([](const ModelBundle& m, const httplib::Request& req, httplib::Response& res) {
    const auto id = parse_integer<std::uint32_t>(req.matches[1]);
    if (!id || *id >= m.params().theta.rows) throw NotFound("unknown community " + std::string(req.matches[1]));
    send(res, 200, community_profile_json(m.params(), m.vocabulary(), *id).dump());
  });
  server.Get(R"(/communities/(\d+)/profile)", profile);
  server.Get(R"(/communities/(\d+))", profile);

  server.Get("/rank", with_model([](const ModelBundle& m, const httplib::Request& req, httplib::Response& res) {
    const std::string q = req.get_param_value("q");
    if (q.empty()) throw Error("missing query parameter 'q'");
    std::size_t k = 10;
    if (req.has_param("k")) {
      const auto parsed = parse_integer<std::size_t>(req.get_param_value("k"));
      if (!parsed) throw Error("'k' must be a non-negative integer");
      k = *parsed;
    }
    send(res, 200, rank_payload(m, q, k));
  }));

  server.Get("/predict", with_model([](const ModelBundle& m, const httplib::Request& req, httplib::Response& res) {
    for (const char* key : {"u", "v", "doc"}) {
      if (req.get_param_value(key).empty()) throw Error(std::string("missing query parameter '") + key + "'");
    }
    std::optional<std::int64_t> t;
    if (req.has_param("t")) {
      t = parse_integer<std::int64_t>(req.get_param_value("t"));
      if (!t) throw Error("'t' must be an integer timestamp");
    }
    send(res, 200,
         predict_payload(m, req.get_param_value("u"), req.get_param_value("v"), req.get_param_value("doc"), t)
             .dump());
  }));

  server.Get("/diffusion-graph", with_model([](const ModelBundle& m, const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint32_t> topic;
    const std::string raw = req.has_param("topic") ? req.get_param_value("topic") : "all";
    if (raw != "all") {
      topic = parse_integer<std::uint32_t>(raw);
      if (!topic) throw Error("'topic' must be a topic id or 'all'");
      if (*topic >= m.params().theta.cols) throw NotFound("unknown topic " + raw);
    }
    send(res, 200, to_json(export_diffusion_graph(m.params(), m.vocabulary(), topic)).dump());
  }));

  server.Post("/jobs/train", with_model([this](const ModelBundle&, const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::object();
    if (!req.body.empty()) {
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed JSON body: ") + e.what());
      }
    }
    send(res, 202, to_json(submit_train(body)).dump());
  }));

  server.Get(R"(/jobs/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto id = parse_integer<std::uint64_t>(req.matches[1]);
    const auto record = id ? job(*id) : std::nullopt;
    if (!record) {
      send_error(res, 404, "unknown job " + std::string(req.matches[1]));
      return;
    }
    send(res, 200, to_json(*record).dump());
  });

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    send_error(res, res.status, res.status == 404 ? "no route for " + req.path : "request failed");
  });
}

}  // namespace comprof::tools
