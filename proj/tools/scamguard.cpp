// scamguard: operator command line over the detection library.

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "scamguard/model_io.hpp"
#include "scamguard/service/http.hpp"
#include "scamguard/sim/benchmark.hpp"
#include "scamguard/sim/dataset_io.hpp"
#include "scamguard/sim/traffic.hpp"

namespace fs = std::filesystem;
using namespace scamguard;

namespace {

struct Common {
  std::uint64_t seed = 7;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
}

Json read_json(const fs::path& p) {
  try {
    return Json::parse(sim::read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::SchemaMismatch, p.string() + ": " + e.what());
  }
}

sim::AdServerWorld load_world(const std::string& path, std::uint64_t seed) {
  sim::AdServerWorld w;
  if (!path.empty()) w = sim::ad_world_from_json(read_json(path));
  else w.seed = seed;
  return w;
}

// ---- gen-data ----

struct GenData {
  Common common;
  std::string traffic_config, world_config;
  int n_per_class = 250;
  int days = 28;
};

int run_gen_data(const GenData& o) {
  auto traffic = o.traffic_config.empty() ? sim::TrafficConfig{} : sim::traffic_config_from_json(read_json(o.traffic_config));
  if (o.traffic_config.empty()) traffic.days = o.days;
  traffic.seed = o.common.seed;
  auto world = load_world(o.world_config, o.common.seed);
  const Json config = {{"traffic", sim::to_json(traffic)}, {"world", sim::to_json(world)}, {"n_per_class", o.n_per_class}};
  const fs::path dir = fs::path(o.common.out_dir) / sim::run_dir_name(config, o.common.seed);
  fs::create_directories(dir);
  sim::write_text(dir / "config.json", config.dump(2) + "\n");
  sim::write_calls_jsonl(dir / "calls.jsonl", sim::generate_call_dataset(traffic));
  sim::write_ads_jsonl(dir / "ads.jsonl", sim::generate_ad_corpus(world, o.n_per_class, o.common.seed));
  std::cout << dir.string() << "\n";
  return 0;
}

// ---- training ----

struct TrainOpts {
  Common common;
  std::string data;
  std::string version;
  std::string task = "calls";
  double lr = 0.0;
  int epochs = 0, batch = 0, patience = 0;
};

void override_cfg(nn::TrainConfig& c, const TrainOpts& o) {
  c.seed = o.common.seed;
  if (o.lr > 0) c.learning_rate = o.lr;
  if (o.epochs > 0) c.epochs = o.epochs;
  if (o.batch > 0) c.batch_size = o.batch;
  if (o.patience > 0) c.early_stop_patience = o.patience;
  c.validate();
}

int run_train_dnn(const TrainOpts& o) {
  sim::CallsBenchmarkConfig cfg;
  cfg.seed = o.common.seed;
  override_cfg(cfg.dnn, o);
  const auto split = sim::split_calls(sim::read_calls_jsonl(fs::path(o.data) / "calls.jsonl"), cfg.test_fraction, cfg.seed);
  const auto scaling = fit_scaling(split.train);
  const auto result = nn::train_dnn(sim::call_feature_matrix(split.train, scaling), sim::call_labels(split.train), cfg.dnn);
  const auto version = o.version.empty() ? "dnn-s" + std::to_string(o.common.seed) : o.version;
  service::ModelRegistry registry(fs::path(o.common.out_dir) / "models");
  registry.publish(service::ModelKind::Calls,
                   service::ModelRegistry::calls_document(result.model.with_version(version), scaling));
  sim::write_text(fs::path(o.common.out_dir) / ("history-" + version + ".json"), nn::to_json(result.history).dump(1) + "\n");
  std::cout << "calls model " << version << " (best epoch " << result.history.best_epoch << ", validation loss "
            << result.history.best_val_loss << ")\n";
  return 0;
}

int run_train_cnn(const TrainOpts& o) {
  sim::AdsBenchmarkConfig cfg;
  cfg.seed = o.common.seed;
  override_cfg(cfg.cnn, o);
  const auto split = sim::split_ads(sim::read_ads_jsonl(fs::path(o.data) / "ads.jsonl"), cfg.test_fraction, cfg.seed);
  const auto result = nn::train_cnn(sim::ad_images(split.train), sim::ad_labels(split.train), cfg.cnn);
  const auto version = o.version.empty() ? "cnn-s" + std::to_string(o.common.seed) : o.version;
  service::ModelRegistry registry(fs::path(o.common.out_dir) / "models");
  registry.publish(service::ModelKind::Ads, service::ModelRegistry::ads_document(result.model.with_version(version)));
  sim::write_text(fs::path(o.common.out_dir) / ("history-" + version + ".json"), nn::to_json(result.history).dump(1) + "\n");
  std::cout << "ads model " << version << " (best epoch " << result.history.best_epoch << ", validation loss "
            << result.history.best_val_loss << ")\n";
  return 0;
}

int run_train_baselines(const TrainOpts& o) {
  const fs::path dir = fs::path(o.common.out_dir) / "baselines" / o.task;
  if (o.task == "calls") {
    sim::CallsBenchmarkConfig cfg;
    cfg.seed = o.common.seed;
    const auto split = sim::split_calls(sim::read_calls_jsonl(fs::path(o.data) / "calls.jsonl"), cfg.test_fraction, cfg.seed);
    const auto scaling = fit_scaling(split.train);
    for (const auto& [name, clf] :
         sim::train_call_baselines(sim::call_feature_matrix(split.train, scaling), sim::call_labels(split.train), cfg)) {
      sim::write_text(dir / (name + ".json"), save_model(clf).dump() + "\n");
      std::cout << "calls baseline " << name << "\n";
    }
    sim::write_text(dir / "scaling.json", to_json(scaling).dump(1) + "\n");
  } else if (o.task == "ads") {
    sim::AdsBenchmarkConfig cfg;
    cfg.seed = o.common.seed;
    const auto split = sim::split_ads(sim::read_ads_jsonl(fs::path(o.data) / "ads.jsonl"), cfg.test_fraction, cfg.seed);
    for (const auto& [name, ovr] :
         sim::train_ad_baselines(sim::ad_feature_matrix(split.train), sim::ad_labels(split.train), cfg)) {
      sim::write_text(dir / (name + ".json"), save_model(ovr).dump() + "\n");
      std::cout << "ads baseline " << name << "\n";
    }
  } else {
    throw Error(ErrorKind::InvalidValue, "--task must be calls or ads");
  }
  return 0;
}

// ---- eval ----

struct EvalOpts {
  Common common;
  std::string task = "calls";
  std::string data;
  std::string models;
  std::string version;
};

int run_eval(const EvalOpts& o) {
  const fs::path models = o.models.empty() ? fs::path(o.common.out_dir) : fs::path(o.models);
  const std::vector<std::string> methods = {"logreg", "tree", "forest", "svm"};
  sim::CountrySummary summary;
  if (o.task == "calls") {
    const auto version = o.version.empty() ? "dnn-s" + std::to_string(o.common.seed) : o.version;
    const auto doc = read_json(models / "models" / "calls" / (version + ".json"));
    sim::CallModels m{scaling_spec_from_json(doc.at("scaling")), load_dnn(doc), {}, {}};
    for (const auto& name : methods)
      m.baselines.push_back({name, load_classifier(read_json(models / "baselines" / "calls" / (name + ".json")))});
    const auto split = sim::split_calls(sim::read_calls_jsonl(fs::path(o.data) / "calls.jsonl"), 0.2, o.common.seed);
    summary = sim::evaluate_call_models(m, split.test);
  } else if (o.task == "ads") {
    const auto version = o.version.empty() ? "cnn-s" + std::to_string(o.common.seed) : o.version;
    sim::AdModels m{load_cnn(read_json(models / "models" / "ads" / (version + ".json"))), {}, {}};
    for (const auto& name : methods)
      m.baselines.push_back({name, load_one_vs_rest(read_json(models / "baselines" / "ads" / (name + ".json")))});
    const auto split = sim::split_ads(sim::read_ads_jsonl(fs::path(o.data) / "ads.jsonl"), 0.2, o.common.seed);
    summary = sim::evaluate_ad_models(m, split.test);
  } else {
    throw Error(ErrorKind::InvalidValue, "--task must be calls or ads");
  }
  const fs::path out(o.common.out_dir);
  sim::write_text(out / ("summary-" + o.task + ".json"), sim::to_json(summary).dump(2) + "\n");
  const auto table = sim::format_table(summary);
  sim::write_text(out / ("summary-" + o.task + ".txt"), table);
  std::cout << table;
  return 0;
}

// ---- serve ----

struct ServeOpts {
  Common common;
  int port = 8080;
  std::string data_dir;
  std::string world_config;
  std::string activate_calls, activate_ads;
  std::size_t top_n = 1000;
};

service::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(ServeOpts o) {
  if (const char* p = std::getenv("SCAMGUARD_PORT")) o.port = std::stoi(p);
  if (const char* d = std::getenv("SCAMGUARD_DATA_DIR")) o.data_dir = d;
  if (o.data_dir.empty()) o.data_dir = o.common.out_dir;
  auto source = std::make_shared<service::SimulatedCaptureSource>(load_world(o.world_config, o.common.seed));
  service::DetectionService svc({o.data_dir, o.top_n, {}}, source);
  if (!o.activate_calls.empty())
    if (auto r = svc.activate(Json{{"kind", "calls"}, {"version", o.activate_calls}}.dump()); r.status != 200)
      throw Error(ErrorKind::NotFound, "cannot activate calls model: " + r.body);
  if (!o.activate_ads.empty())
    if (auto r = svc.activate(Json{{"kind", "ads"}, {"version", o.activate_ads}}.dump()); r.status != 200)
      throw Error(ErrorKind::NotFound, "cannot activate ads model: " + r.body);
  service::HttpServer server(svc);
  const int port = server.bind("127.0.0.1", o.port);
  std::cout << "listening on port " << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

// ---- fetch-sim ----

struct FetchOpts {
  Common common;
  std::string url;
  std::vector<std::string> regions;
  Timestamp at = 1467590400;
  std::string world_config;
};

int run_fetch_sim(const FetchOpts& o) {
  const auto world = load_world(o.world_config, o.common.seed);
  const auto id = sim::parse_ad_url(o.url);
  if (!id) throw Error(ErrorKind::UnknownUrl, "not a simulated ad url: " + o.url);
  std::vector<std::string> regions = o.regions;
  if (regions.empty())
    for (const auto& r : world.regions) regions.push_back(r.region);
  const auto caps = sim::fetch_from_regions(world, *id, regions, o.at);
  for (const auto& c : caps)
    std::cout << c.context.region << "  bucket " << c.context.time_bucket << "  " << name(*c.label) << "  "
              << hash_identifier(Json(to_json(c).at("screenshot")).dump()).substr(0, 16) << "  " << c.destination_url << "\n";
  const fs::path out = fs::path(o.common.out_dir) /
                       ("fetch-" + std::to_string(*id) + "-b" + std::to_string(caps.front().context.time_bucket) + ".jsonl");
  sim::write_ads_jsonl(out, caps);
  std::cout << out.string() << "\n";
  return 0;
}

// ---- report ----

struct ReportOpts {
  Common common;
  std::string data_dir;
  std::string id;
};

int run_report(const ReportOpts& o) {
  const fs::path dir = o.data_dir.empty() ? fs::path(o.common.out_dir) : fs::path(o.data_dir);
  const auto rep = service::analysis_report_from_json(read_json(dir / "reports" / (o.id + ".json")));
  if (!fs::exists(dir / rep.screenshot_ref)) throw Error(ErrorKind::NotFound, "screenshot missing: " + rep.screenshot_ref);
  std::cout << "report        " << rep.report_id << "\n"
            << "original url  " << rep.original_url << "\n"
            << "destination   " << rep.destination_url << "\n"
            << "screenshot    " << rep.screenshot_ref << "\n"
            << "captured at   " << rep.captured_at << "\n"
            << "region        " << rep.region << "\n"
            << "decision      " << (rep.verdict.decision ? "deceptive" : "benign") << " (score " << rep.verdict.score << ")\n";
  if (const auto* cat = std::get_if<AdCategory>(&rep.verdict.category)) std::cout << "category      " << name(*cat) << "\n";
  std::cout << "model         " << rep.verdict.model_version << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scamguard: phone-scam and deceptive-ad detection toolkit"};
  app.require_subcommand(1);

  GenData gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic call and ad datasets (JSONL)");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--traffic-config", gen.traffic_config, "Traffic config JSON");
  gen_cmd->add_option("--world-config", gen.world_config, "Ad world config JSON");
  gen_cmd->add_option("--n-per-class", gen.n_per_class, "Ad captures per class")->capture_default_str();
  gen_cmd->add_option("--days", gen.days, "Days of call traffic")->capture_default_str();

  TrainOpts dnn, cnn, base;
  auto* dnn_cmd = app.add_subcommand("train-dnn", "Train the calls DNN and publish it to <out-dir>/models");
  auto* cnn_cmd = app.add_subcommand("train-cnn", "Train the ads CNN and publish it to <out-dir>/models");
  auto* base_cmd = app.add_subcommand("train-baselines", "Train logreg/tree/forest/svm baselines");
  for (auto [cmd, o] : {std::pair{dnn_cmd, &dnn}, std::pair{cnn_cmd, &cnn}, std::pair{base_cmd, &base}}) {
    add_common(cmd, o->common);
    cmd->add_option("--data", o->data, "Run directory from gen-data")->required();
  }
  for (auto [cmd, o] : {std::pair{dnn_cmd, &dnn}, std::pair{cnn_cmd, &cnn}}) {
    cmd->add_option("--version", o->version, "Model version name");
    cmd->add_option("--lr", o->lr, "Learning rate");
    cmd->add_option("--epochs", o->epochs, "Maximum epochs");
    cmd->add_option("--batch", o->batch, "Mini-batch size");
    cmd->add_option("--patience", o->patience, "Early-stopping patience");
  }
  base_cmd->add_option("--task", base.task, "calls or ads")->capture_default_str();

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Per-country evaluation table for every method");
  add_common(eval_cmd, ev.common);
  eval_cmd->add_option("--task", ev.task, "calls or ads")->capture_default_str();
  eval_cmd->add_option("--data", ev.data, "Run directory from gen-data")->required();
  eval_cmd->add_option("--models", ev.models, "Directory holding models/ and baselines/ (default: --out-dir)");
  eval_cmd->add_option("--version", ev.version, "Neural model version (default dnn-s<seed> / cnn-s<seed>)");

  ServeOpts sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP detection service");
  add_common(serve_cmd, sv.common);
  serve_cmd->add_option("--port", sv.port, "Port (0 = any free port); SCAMGUARD_PORT overrides")->capture_default_str();
  serve_cmd->add_option("--data-dir", sv.data_dir, "Data directory (default: --out-dir); SCAMGUARD_DATA_DIR overrides");
  serve_cmd->add_option("--world-config", sv.world_config, "Ad world config JSON for the simulated capture source");
  serve_cmd->add_option("--activate-calls", sv.activate_calls, "Calls model version to activate on start");
  serve_cmd->add_option("--activate-ads", sv.activate_ads, "Ads model version to activate on start");
  serve_cmd->add_option("--top-n", sv.top_n, "Client blacklist size")->capture_default_str();

  FetchOpts fe;
  auto* fetch_cmd = app.add_subcommand("fetch-sim", "Capture a simulated ad URL from several regions");
  add_common(fetch_cmd, fe.common);
  fetch_cmd->add_option("--url", fe.url, "Ad URL")->required();
  fetch_cmd->add_option("--regions", fe.regions, "Region codes (default: all)")->delimiter(',');
  fetch_cmd->add_option("--at", fe.at, "Capture time (UTC seconds)")->capture_default_str();
  fetch_cmd->add_option("--world-config", fe.world_config, "Ad world config JSON");

  ReportOpts rp;
  auto* report_cmd = app.add_subcommand("report", "Pretty-print a stored analysis report");
  add_common(report_cmd, rp.common);
  report_cmd->add_option("--data-dir", rp.data_dir, "Service data directory (default: --out-dir)");
  report_cmd->add_option("--id", rp.id, "Report id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "scamguard: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*dnn_cmd) return run_train_dnn(dnn);
    if (*cnn_cmd) return run_train_cnn(cnn);
    if (*base_cmd) return run_train_baselines(base);
    if (*eval_cmd) return run_eval(ev);
    if (*serve_cmd) return run_serve(sv);
    if (*fetch_cmd) return run_fetch_sim(fe);
    if (*report_cmd) return run_report(rp);
  } catch (const Error& e) {
    std::cerr << "scamguard: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "scamguard: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
