#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "comprof/tools/model_bundle.hpp"

namespace httplib {
class Server;
}

namespace comprof::tools {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };
std::string to_string(JobStatus status);

struct JobRecord {
  std::uint64_t id = 0;
  std::string kind = "train";
  JobStatus status = JobStatus::kQueued;
  std::filesystem::path artifact;  // snapshot written on success
  std::string error;
};

nlohmann::ordered_json to_json(const JobRecord& job);

/// Serves one immutable model. Training jobs run one at a time on a
/// background thread against the served graph and write new snapshots under
/// the jobs directory; they never replace the served model.
class Service {
 public:
  struct Options {
    std::filesystem::path jobs_dir;  // empty: <tmp>/comprof-jobs
  };

  explicit Service(Options options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads in the background; requests get 503 until it finishes.
  void load_async(std::filesystem::path snapshot, std::filesystem::path graph_dir,
                  IngestOptions ingest = {});
  void set_model(std::shared_ptr<const ModelBundle> model);
  std::shared_ptr<const ModelBundle> model() const;
  /// Blocks until loading finished; false if it failed.
  bool wait_until_loaded();

  std::optional<JobRecord> job(std::uint64_t id) const;
  /// Queues a training job; the config keys follow train_config_from_json.
  JobRecord submit_train(const nlohmann::json& config);
  /// Blocks until the job is done or failed.
  JobRecord wait_for_job(std::uint64_t id);

  void mount(httplib::Server& server);

 private:
  void run_jobs();

  Options options_;
  mutable std::mutex mutex_;
  std::condition_variable changed_;
  std::shared_ptr<const ModelBundle> model_;
  bool loading_ = false;
  std::string load_error_;
  std::thread loader_;

  std::map<std::uint64_t, JobRecord> jobs_;
  std::map<std::uint64_t, TrainConfig> pending_configs_;
  std::deque<std::uint64_t> queue_;
  std::uint64_t next_job_ = 1;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace comprof::tools
