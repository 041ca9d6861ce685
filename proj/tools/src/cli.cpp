#include "comprof/tools/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "comprof/apps.hpp"
#include "comprof/eval.hpp"
#include "comprof/synthetic.hpp"
#include "comprof/tools/model_bundle.hpp"
#include "comprof/tools/service.hpp"

namespace comprof::tools {
namespace {

struct IngestFlags {
  std::int64_t granularity = 86400;
  std::size_t min_tokens = 2;
  std::string stopwords;
  bool no_stopwords = false;

  void add(CLI::App* app) {
    app->add_option("--granularity", granularity, "Seconds per time bucket")->capture_default_str();
    app->add_option("--min-tokens", min_tokens, "Drop documents with fewer tokens")->capture_default_str();
    app->add_option("--stopwords", stopwords, "Stopword file, one word per line");
    app->add_flag("--no-stopwords", no_stopwords, "Keep stopwords");
  }
  IngestOptions options() const {
    IngestOptions o;
    o.granularity = granularity;
    o.min_tokens = min_tokens;
    o.use_stopwords = !no_stopwords;
    o.stopword_file = stopwords;
    return o;
  }
};

struct TrainFlags {
  TrainConfig config;
  std::string transform = "log1p-minmax";
  std::string ablation = "full";

  void add(CLI::App* app) {
    auto& h = config.hyper;
    app->add_option("--communities,-C", h.communities, "Number of communities")->capture_default_str();
    app->add_option("--topics,-Z", h.topics, "Number of topics")->capture_default_str();
    app->add_option("--alpha", h.alpha, "Community-topic prior (default 50/topics)");
    app->add_option("--rho", h.rho, "User-community prior (default 50/communities)");
    app->add_option("--beta", h.beta, "Topic-word prior")->capture_default_str();
    app->add_option("--iterations", h.iterations, "Outer iterations")->capture_default_str();
    app->add_option("--nu-steps", h.nu_steps, "Gradient steps on nu per iteration")->capture_default_str();
    app->add_option("--learning-rate", h.learning_rate, "Step size for nu")->capture_default_str();
    app->add_option("--negative-ratio", h.negative_ratio, "Sampled non-links per diffusion link")
        ->capture_default_str();
    app->add_option("--burn-in", h.burn_in, "Iterations before read-out averaging (default half)");
    app->add_option("--popularity-transform", transform, "raw, log1p or log1p-minmax")->capture_default_str();
    app->add_option("--ablation", ablation,
                    "full, no-joint, no-heterogeneity, no-topic or no-individual-topic")
        ->capture_default_str();
    app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    app->add_option("--lda-sweeps", config.lda_sweeps, "LDA sweeps used for segmentation")
        ->capture_default_str();
  }
  TrainConfig resolve() {
    config.hyper.popularity_transform = parse_popularity_transform(transform);
    config.ablation = AblationConfig::parse(ablation);
    config.hyper.validate();
    return config;
  }
};

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Every option can also come from COMPROF_<NAME>, e.g. COMPROF_WORKERS.
void bind_environment(CLI::App* app) {
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string env = "COMPROF_";
    for (char ch : name) env += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(env);
  }
}

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Community profiling and detection"};
  app.name("comprof");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-style config file with one [subcommand] section each");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a raw dataset and write it back normalized");
  std::string ingest_in, ingest_out;
  IngestFlags ingest_flags;
  ingest_cmd->add_option("--input", ingest_in, "Directory with users.tsv, docs.jsonl, friendships.tsv, diffusions.tsv")
      ->required();
  ingest_cmd->add_option("--output", ingest_out, "Output directory")->required();
  ingest_flags.add(ingest_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write a snapshot and a training report");
  std::string train_graph, train_model, train_report;
  std::size_t train_workers = default_workers();
  IngestFlags train_ingest;
  TrainFlags train_flags;
  train_cmd->add_option("--graph", train_graph, "Dataset directory")->required();
  train_cmd->add_option("--model", train_model, "Snapshot to write")->required();
  train_cmd->add_option("--report", train_report, "Training report CSV (default <model>.report.csv)");
  train_cmd->add_option("--workers", train_workers, "Parallel sampling workers")->capture_default_str();
  train_ingest.add(train_cmd);
  train_flags.add(train_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validate the model configuration on a dataset");
  std::string eval_graph, eval_model, eval_out = "eval";
  std::size_t eval_workers = default_workers();
  CrossValidationOptions cv;
  IngestFlags eval_ingest;
  eval_cmd->add_option("--model", eval_model, "Snapshot whose configuration is evaluated")->required();
  eval_cmd->add_option("--graph", eval_graph, "Dataset directory")->required();
  eval_cmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  eval_cmd->add_option("--evaluate-folds", cv.evaluate_folds, "Only run the first N folds (0: all)");
  eval_cmd->add_option("--top-k", cv.top_k, "Communities per user for conductance and ranking")
      ->capture_default_str();
  eval_cmd->add_option("--k-max", cv.k_max, "Largest K for MAP/MAR/MAF")->capture_default_str();
  eval_cmd->add_option("--queries", cv.queries, "Ranking queries per fold")->capture_default_str();
  eval_cmd->add_option("--cv-seed", cv.seed, "Fold assignment seed")->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "Output prefix for <out>.csv and <out>.json")->capture_default_str();
  eval_cmd->add_option("--workers", eval_workers, "Parallel sampling workers")->capture_default_str();
  eval_ingest.add(eval_cmd);

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Rank communities by their interest in a query");
  std::string rank_model, rank_query;
  std::size_t rank_k = 10;
  bool rank_json = false;
  rank_cmd->add_option("--model", rank_model, "Snapshot")->required();
  rank_cmd->add_option("--query,-q", rank_query, "Query text")->required();
  rank_cmd->add_option("--k", rank_k, "Number of communities (0: all)")->capture_default_str();
  rank_cmd->add_flag("--json", rank_json, "Print the service payload instead of a table");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Probability that user u diffuses a document of user v");
  std::string predict_model, predict_graph, predict_u, predict_v, predict_doc;
  std::optional<std::int64_t> predict_t;
  IngestFlags predict_ingest;
  predict_cmd->add_option("--model", predict_model, "Snapshot")->required();
  predict_cmd->add_option("--graph", predict_graph, "Dataset directory the snapshot was trained on")->required();
  predict_cmd->add_option("--u", predict_u, "Diffusing user")->required();
  predict_cmd->add_option("--v", predict_v, "Author of the document")->required();
  predict_cmd->add_option("--doc", predict_doc, "Document id")->required();
  predict_cmd->add_option("--t", predict_t, "Timestamp (default: the document's own)");
  predict_ingest.add(predict_cmd);

  // export-graph
  auto* export_cmd = app.add_subcommand("export-graph", "Export the community diffusion graph as JSON");
  std::string export_model, export_topic = "all", export_out;
  bool export_unfiltered = false;
  export_cmd->add_option("--model", export_model, "Snapshot")->required();
  export_cmd->add_option("--topic", export_topic, "Topic id or 'all'")->capture_default_str();
  export_cmd->add_option("--out", export_out, "Output file (default stdout)");
  export_cmd->add_flag("--all-edges", export_unfiltered, "Keep edges below the mean weight");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve a snapshot over HTTP");
  std::string serve_model, serve_graph, serve_host = "127.0.0.1", serve_jobs;
  int serve_port = 8080;
  IngestFlags serve_ingest;
  serve_cmd->add_option("--model", serve_model, "Snapshot")->required();
  serve_cmd->add_option("--graph", serve_graph, "Dataset directory (enables /predict and training jobs)");
  serve_cmd->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_port, "Port")->capture_default_str();
  serve_cmd->add_option("--jobs-dir", serve_jobs, "Where training jobs write snapshots");
  serve_ingest.add(serve_cmd);

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic dataset with planted communities");
  std::string generate_spec, generate_out;
  std::uint64_t generate_seed = 1;
  generate_cmd->add_option("--spec", generate_spec, "JSON generator settings (defaults when absent)");
  generate_cmd->add_option("--output", generate_out, "Output directory")->required();
  generate_cmd->add_option("--seed", generate_seed, "Random seed")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) bind_environment(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << '\n';
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 2;
  }

  try {
    if (*ingest_cmd) {
      auto result = ingest(IngestPaths::in_directory(ingest_in), ingest_flags.options());
      write_graph(ingest_out, result.graph, result.vocabulary);
      const auto& s = result.stats;
      out << "users " << result.graph.num_users() << ", documents " << result.graph.num_documents()
          << ", words " << result.graph.num_words() << ", friendships " << result.graph.num_friendships()
          << ", diffusions " << result.graph.num_diffusions() << '\n';
      out << "dropped documents " << s.dropped_documents << ", users " << s.dropped_users
          << ", friendships " << s.dropped_friendships << ", diffusions " << s.dropped_diffusions
          << "; duplicates " << s.duplicate_edges << ", self loops " << s.self_loops << '\n';
    } else if (*train_cmd) {
      TrainConfig config = train_flags.resolve();
      if (train_workers == 0) throw Error("workers must be positive");
      config.workers = train_workers;
      const auto data = ingest(IngestPaths::in_directory(train_graph), train_ingest.options());
      Trainer trainer(data.graph, config);
      while (!trainer.done()) {
        const auto& rec = trainer.step();
        out << "iteration " << rec.iteration << " perplexity " << rec.perplexity << " log-joint "
            << rec.log_joint << '\n';
      }
      save_snapshot(train_model, trainer.snapshot(data.vocabulary));
      trainer.report().write_csv(train_report.empty() ? train_model + ".report.csv" : train_report);
      out << "wrote " << train_model << '\n';
    } else if (*eval_cmd) {
      const Snapshot snap = load_snapshot(eval_model);
      const auto data = ingest(IngestPaths::in_directory(eval_graph), eval_ingest.options());
      TrainConfig config;
      config.hyper = snap.hyper;
      config.ablation = snap.ablation;
      config.seed = snap.seed;
      config.workers = eval_workers;
      config.compute_log_joint = false;
      config.track_perplexity = false;
      const auto report = cross_validate(data.graph, data.vocabulary, config, cv);
      report.write_csv(eval_out + ".csv");
      report.write_json(eval_out + ".json");
      out << "folds " << report.folds << " conductance " << report.conductance << " friendship-auc "
          << report.friendship_auc << " diffusion-auc " << report.diffusion_auc << " perplexity "
          << report.perplexity << '\n';
      out << "wrote " << eval_out << ".csv and " << eval_out << ".json\n";
    } else if (*rank_cmd) {
      const auto bundle = load_bundle(rank_model, {});
      const std::string payload = rank_payload(*bundle, rank_query, rank_k);
      if (rank_json) {
        out << payload << '\n';
      } else {
        const auto j = nlohmann::json::parse(payload);
        if (!j["skipped"].empty()) out << "skipped: " << j["skipped"].dump() << '\n';
        out << "rank  community  score\n";
        std::size_t r = 1;
        for (const auto& item : j["results"]) {
          out << std::setw(4) << r++ << "  " << std::setw(9) << item["community"].get<int>() << "  "
              << std::setprecision(6) << item["score"].get<double>() << '\n';
        }
      }
    } else if (*predict_cmd) {
      const auto bundle = load_bundle(predict_model, predict_graph, predict_ingest.options());
      out << predict_payload(*bundle, predict_u, predict_v, predict_doc, predict_t).dump() << '\n';
    } else if (*export_cmd) {
      const auto bundle = load_bundle(export_model, {});
      std::optional<std::uint32_t> topic;
      if (export_topic != "all") {
        std::size_t used = 0;
        unsigned long z = 0;
        try {
          z = std::stoul(export_topic, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != export_topic.size() || z >= bundle->params().theta.cols) {
          throw Error("unknown topic '" + export_topic + "'");
        }
        topic = static_cast<std::uint32_t>(z);
      }
      const std::string body =
          to_json(export_diffusion_graph(bundle->params(), bundle->vocabulary(), topic, !export_unfiltered))
              .dump(2);
      if (export_out.empty()) {
        out << body << '\n';
      } else {
        std::ofstream file(export_out);
        if (!file) throw Error("cannot write " + export_out);
        file << body << '\n';
      }
    } else if (*serve_cmd) {
      Service service(Service::Options{serve_jobs});
      service.load_async(serve_model, serve_graph, serve_ingest.options());
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      out << "listening on " << serve_host << ':' << serve_port << std::endl;
      const bool ok = server.listen(serve_host, serve_port);
      g_server = nullptr;
      if (!ok) throw Error("cannot listen on " + serve_host + ":" + std::to_string(serve_port));
    } else if (*generate_cmd) {
      const SyntheticSpec spec = generate_spec.empty() ? SyntheticSpec{} : load_synthetic_spec(generate_spec);
      Rng rng(generate_seed, 0);
      const auto data = generate(spec, rng);
      write_graph(generate_out, data.graph, data.vocabulary);
      nlohmann::ordered_json truth;
      truth["schema_version"] = kSchemaVersion;
      truth["spec"] = nlohmann::ordered_json::parse(nlohmann::json(spec).dump());
      nlohmann::ordered_json users = nlohmann::ordered_json::object();
      for (UserId u = 0; u < data.graph.num_users(); ++u) users[data.graph.user_name(u)] = data.user_community[u];
      truth["user_community"] = users;
      std::ofstream file(std::filesystem::path(generate_out) / "truth.json");
      file << truth.dump(2) << '\n';
      out << "wrote " << data.graph.num_users() << " users, " << data.graph.num_documents() << " documents, "
          << data.graph.num_friendships() << " friendships, " << data.graph.num_diffusions()
          << " diffusions to " << generate_out << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace comprof::tools
