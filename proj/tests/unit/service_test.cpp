#include <gtest/gtest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "comprof/apps.hpp"
#include "comprof/tools/cli.hpp"
#include "comprof/tools/service.hpp"
#include "httplib.h"
#include "tools_fixture.hpp"

using namespace comprof;
using namespace comprof::tools;
using namespace testing_helpers;

namespace {

class Running {
 public:
  explicit Running(Service& service) {
    service.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto& files = model_files();
    Service::Options opts;
    opts.jobs_dir = temp_dir("service-jobs");
    service_ = new Service(opts);
    service_->load_async(files.snapshot, files.graph_dir);
    ASSERT_TRUE(service_->wait_until_loaded());
    running_ = new Running(*service_);
  }
  static void TearDownTestSuite() {
    delete running_;
    delete service_;
  }

  static nlohmann::json get_json(const std::string& path, int expected_status) {
    auto c = running_->client();
    auto res = c.Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expected_status) << path << " -> " << res->body;
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
    return nlohmann::json::parse(res->body);
  }

  static Service* service_;
  static Running* running_;
};

Service* ServiceTest::service_ = nullptr;
Running* ServiceTest::running_ = nullptr;

}  // namespace

TEST_F(ServiceTest, Health) {
  const auto j = get_json("/health", 200);
  EXPECT_EQ(j["status"], "ready");
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
}

TEST_F(ServiceTest, Communities) {
  const auto j = get_json("/communities", 200);
  EXPECT_EQ(j["communities"].size(), 3u);
  const auto p = get_json("/communities/1/profile", 200);
  EXPECT_EQ(p["id"], 1);
  EXPECT_EQ(get_json("/communities/1", 200), p);
  const auto missing = get_json("/communities/3/profile", 404);
  EXPECT_TRUE(missing.contains("error"));
}

TEST_F(ServiceTest, RankMatchesCliBytes) {
  const auto& files = model_files();
  const auto word = files.snap.vocabulary.word(0) + " " + files.snap.vocabulary.word(5);
  auto c = running_->client();
  const auto res = c.Get("/rank?q=" + httplib::detail::encode_query_param(word) + "&k=2");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;

  const std::string model = files.snapshot.string();
  const char* argv[] = {"comprof", "rank", "--model", model.c_str(), "-q", word.c_str(), "--k", "2", "--json"};
  std::ostringstream out, err;
  ASSERT_EQ(run_cli(9, argv, out, err), 0) << err.str();
  EXPECT_EQ(out.str(), res->body + "\n");

  const auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["results"].size(), 2u);
}

TEST_F(ServiceTest, RankErrors) {
  get_json("/rank", 400);
  get_json("/rank?q=w1&k=abc", 400);
  const auto oov = get_json("/rank?q=zzzunknown", 400);
  EXPECT_NE(oov["error"].get<std::string>().find("zzzunknown"), std::string::npos);
}

TEST_F(ServiceTest, Predict) {
  const auto& f = model_files();
  const std::string base = "/predict?u=" + f.some_user + "&v=" + f.other_user + "&doc=" + f.some_doc;
  const auto j = get_json(base, 200);
  const double p = j["probability"];
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  get_json(base + "&t=1600000000", 200);
  get_json(base + "&t=soon", 400);
  get_json("/predict?u=" + f.some_user, 400);
  get_json("/predict?u=nobody&v=" + f.other_user + "&doc=" + f.some_doc, 404);
  get_json("/predict?u=" + f.some_user + "&v=" + f.other_user + "&doc=nodoc", 404);
}

TEST_F(ServiceTest, DiffusionGraph) {
  const auto all = get_json("/diffusion-graph", 200);
  EXPECT_EQ(all["topic"], "all");
  EXPECT_EQ(all["nodes"].size(), 3u);
  const auto one = get_json("/diffusion-graph?topic=2", 200);
  EXPECT_EQ(one["topic"], 2);
  get_json("/diffusion-graph?topic=x", 400);
  get_json("/diffusion-graph?topic=4", 404);
}

TEST_F(ServiceTest, RepeatedReadsAreIdentical) {
  auto c = running_->client();
  for (const char* path : {"/communities", "/diffusion-graph", "/communities/0/profile"}) {
    const auto a = c.Get(path), b = c.Get(path);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->body, b->body) << path;
  }
}

TEST_F(ServiceTest, UnknownRouteIsJson404) {
  const auto j = get_json("/nope", 404);
  EXPECT_TRUE(j.contains("error"));
  get_json("/jobs/999", 404);
}

TEST_F(ServiceTest, TrainJobLifecycle) {
  auto c = running_->client();
  const auto bad = c.Post("/jobs/train", R"({"colour": 1})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  const auto broken = c.Post("/jobs/train", "{not json", "application/json");
  ASSERT_TRUE(broken);
  EXPECT_EQ(broken->status, 400);

  const auto res = c.Post("/jobs/train", R"({"iterations": 2, "lda_sweeps": 1, "seed": 9})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 202) << res->body;
  const auto created = nlohmann::json::parse(res->body);
  const auto id = created["id"].get<std::uint64_t>();
  EXPECT_EQ(created["kind"], "train");

  const auto done = service_->wait_for_job(id);
  EXPECT_EQ(done.status, JobStatus::kDone) << done.error;
  const auto polled = get_json("/jobs/" + std::to_string(id), 200);
  EXPECT_EQ(polled["status"], "done");
  const auto snap = load_snapshot(done.artifact);
  EXPECT_EQ(snap.hyper.iterations, 2u);
  EXPECT_EQ(snap.seed, 9u);
  // The served model is untouched.
  EXPECT_EQ(service_->model()->snapshot.hyper.iterations, model_files().snap.hyper.iterations);
}

TEST(ServiceNoModel, RoutesAnswer503) {
  Service service(Service::Options{temp_dir("service-empty")});
  Running running(service);
  auto c = running.client();
  const auto health = c.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  for (const char* path : {"/communities", "/rank?q=a", "/diffusion-graph"}) {
    const auto res = c.Get(path);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503) << path;
  }
}

TEST(ServiceNoModel, FailedLoadIsReported) {
  Service service(Service::Options{temp_dir("service-fail")});
  service.load_async("/nonexistent.snap", {});
  EXPECT_FALSE(service.wait_until_loaded());
  Running running(service);
  auto c = running.client();
  const auto health = c.Get("/health");
  ASSERT_TRUE(health);
  const auto j = nlohmann::json::parse(health->body);
  EXPECT_EQ(j["status"], "failed");
  EXPECT_NE(j["error"].get<std::string>().find("nonexistent"), std::string::npos);
}
