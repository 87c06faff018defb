// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
// Trained models are shared between criteria (benchmark -> eval table ->
// service -> serialization), so the criteria run in order.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "scamguard/model_io.hpp"
#include "scamguard/service/http.hpp"
#include "scamguard/sim/adworld.hpp"
#include "scamguard/sim/benchmark.hpp"
#include "scamguard/sim/dataset_io.hpp"
#include "scamguard/sim/traffic.hpp"

#include <httplib.h>

namespace fs = std::filesystem;
using namespace scamguard;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << std::fixed << v;
  return o.str();
}

/// Collects failed expectations and measurements for one criterion.
struct Checks {
  std::vector<std::string> failed;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

struct Shared {
  std::vector<ProfiledCall> calls;
  std::optional<sim::CallsSplit> calls_split;
  std::optional<sim::CallModels> call_models;
  std::optional<sim::CountrySummary> calls_summary;

  std::vector<AdCapture> ads;
  std::optional<sim::AdsSplit> ads_split;
  std::optional<sim::AdModels> ad_models;
  std::optional<sim::CountrySummary> ads_summary;
};

fs::path scratch(const std::string& name) {
  static int counter = 0;
  auto p = fs::temp_directory_path() /
           ("scamguard-accept-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const sim::MethodSummary& method(const sim::CountrySummary& s, const std::string& name) {
  for (const auto& m : s.methods)
    if (m.method == name) return m;
  throw std::runtime_error("method missing from summary: " + name);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// ---- 1 ----

void gradients(Checks& c, Shared&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  struct Kind {
    const char* name;
    std::function<double()> run;
  };
  const std::vector<Kind> kinds = {
      {"dense-relu", [&] { return gradcheck::check_dense(nn::Activation::ReLU, rng); }},
      {"dense-sigmoid", [&] { return gradcheck::check_dense(nn::Activation::Sigmoid, rng); }},
      {"dense-softmax", [&] { return gradcheck::check_dense(nn::Activation::Softmax, rng); }},
      {"conv3x3", [&] { return gradcheck::check_conv(rng); }},
      {"maxpool2x2", [&] { return gradcheck::check_pool(rng); }},
      {"whole-dnn", [&] { return gradcheck::check_whole_dnn(rng); }},
  };
  double overall = 0.0;
  for (const auto& k : kinds) {
    double worst = 0.0;
    for (int i = 0; i < gradcheck::kInstances; ++i) worst = std::max(worst, k.run());
    c.expect(worst < gradcheck::kTolerance, std::string(k.name) + " rel err " + std::to_string(worst));
    overall = std::max(overall, worst);
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt(secs, 1) + " s");
  c.note(std::to_string(kinds.size()) + " kinds x " + std::to_string(gradcheck::kInstances) +
         " instances, worst rel err " + std::to_string(overall));
}

// ---- 2 ----

template <typename F>
std::optional<ErrorKind> failure_kind(F&& make) {
  try {
    make();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

void architecture_lock(Checks& c, Shared&) {
  using nn::Activation;
  const auto good = nn::DnnModel::zeros().layers();
  const std::vector<std::pair<int, int>> shape = {{9, 14}, {14, 9}, {9, 5}, {5, 1}};
  const std::vector<Activation> acts = {Activation::ReLU, Activation::ReLU, Activation::ReLU, Activation::Sigmoid};
  c.expect(good.size() == 4, "calls model depth");
  for (std::size_t k = 0; k < good.size() && k < 4; ++k)
    c.expect(good[k].in_size() == shape[k].first && good[k].out_size() == shape[k].second && good[k].activation == acts[k],
             "layer " + std::to_string(k) + " shape");

  int negatives = 0;
  auto refuse = [&](std::vector<nn::Dense> layers, const std::string& what) {
    ++negatives;
    c.expect(failure_kind([&] { nn::DnnModel m(std::move(layers)); }) == ErrorKind::ArchitectureMismatch, what);
  };
  auto three = good;
  three.pop_back();
  refuse(three, "3 layers");
  auto five = good;
  five.push_back(nn::Dense(1, 1, Activation::Sigmoid));
  refuse(five, "5 layers");
  for (std::size_t k = 0; k < good.size(); ++k) {
    auto wide = good;
    wide[k] = nn::Dense(good[k].in_size(), good[k].out_size() + 1, good[k].activation);
    refuse(wide, "wider layer " + std::to_string(k));
    auto narrow = good;
    narrow[k] = nn::Dense(good[k].in_size() - 1, good[k].out_size(), good[k].activation);
    refuse(narrow, "narrower input " + std::to_string(k));
    for (auto act : {Activation::ReLU, Activation::Sigmoid, Activation::Softmax, Activation::Identity}) {
      if (act == good[k].activation) continue;
      auto swapped = good;
      swapped[k].activation = act;
      refuse(swapped, "activation swap " + std::to_string(k));
    }
  }
  // a stored document with a different shape cannot be loaded either
  auto doc = save_model(nn::DnnModel::zeros());
  doc["layers"].erase(doc["layers"].size() - 1);
  ++negatives;
  c.expect(failure_kind([&] { load_model(doc); }) == ErrorKind::ArchitectureMismatch, "truncated document");

  const auto z = nn::CnnModel::zeros();
  for (auto&& make : std::vector<std::function<void()>>{
           [&] { nn::CnnModel(nn::Conv2d<double>(1, 4), z.conv2(), z.dense1(), z.dense2()); },
           [&] { nn::CnnModel(z.conv1(), nn::Conv2d<double>(8, 8), z.dense1(), z.dense2()); },
           [&] { nn::CnnModel(z.conv1(), z.conv2(), nn::Dense(1024, 64, Activation::Sigmoid), z.dense2()); },
           [&] { nn::CnnModel(z.conv1(), z.conv2(), z.dense1(), nn::Dense(64, 3, Activation::Softmax)); },
       }) {
    ++negatives;
    c.expect(failure_kind(make) == ErrorKind::ArchitectureMismatch, "cnn negative " + std::to_string(negatives));
  }
  c.note("9-14-9-5-1 relu/relu/relu/sigmoid, " + std::to_string(negatives) + " negative constructions refused");
}

// ---- 3 ----

void calls_benchmark(Checks& c, Shared& s) {
  const sim::TrafficConfig traffic;
  c.expect(traffic.countries.size() == 8 && traffic.days == 28 && traffic.seed == 7, "default traffic config");
  s.calls = sim::generate_call_dataset(traffic);

  const auto t0 = Clock::now();
  const sim::CallsBenchmarkConfig cfg;
  s.calls_split = sim::split_calls(s.calls, cfg.test_fraction, cfg.seed);
  s.call_models = sim::train_call_models(s.calls_split->train, cfg);
  s.calls_summary = sim::evaluate_call_models(*s.call_models, s.calls_split->test);
  const double secs = seconds_since(t0);

  const double dnn = method(*s.calls_summary, "dnn").mean_accuracy;
  const double logreg = method(*s.calls_summary, "logreg").mean_accuracy;
  const double svm = method(*s.calls_summary, "svm").mean_accuracy;
  c.expect(dnn >= 0.90, "dnn mean " + fmt(dnn));
  c.expect(dnn - logreg >= 0.05, "dnn - logreg " + fmt(dnn - logreg));
  c.expect(dnn - svm >= 0.05, "dnn - svm " + fmt(dnn - svm));
  c.expect(secs < 300.0, "train+eval " + fmt(secs, 1) + " s");

  // Linear oracle per country: a certified ceiling for every affine rule
  // (disjoint hull-containment groups) and the best boundary a search finds.
  std::map<std::string, std::vector<ProfiledCall>> by_country;
  for (const auto& call : s.calls_split->test) by_country[call.event.region()].push_back(call);
  double ceiling_sum = 0.0, found_sum = 0.0;
  for (const auto& [country, calls] : by_country) {
    const auto x = sim::call_feature_matrix(calls, s.call_models->scaling);
    const auto y = sim::call_labels(calls);
    const double ceiling = 1.0 - static_cast<double>(oracle::forced_linear_errors(x, y)) / static_cast<double>(calls.size());
    ceiling_sum += ceiling;
    found_sum += oracle::linear_boundary_search(x, y, {}, 200, 3);
    for (const char* linear : {"logreg", "svm"})
      for (const auto& row : method(*s.calls_summary, linear).rows)
        if (row.country == country)
          c.expect(row.accuracy <= ceiling, std::string(linear) + " above certified ceiling in " + country);
  }
  const double ceiling = ceiling_sum / static_cast<double>(by_country.size());
  const double found = found_sum / static_cast<double>(by_country.size());
  c.expect(dnn > ceiling, "dnn " + fmt(dnn) + " not above linear ceiling " + fmt(ceiling));
  c.note("dnn " + fmt(dnn) + ", logreg " + fmt(logreg) + ", svm " + fmt(svm) + "; best linear in [" + fmt(found) + ", " +
         fmt(ceiling) + "]; " + fmt(secs, 1) + " s");
}

// ---- 4 ----

void ads_benchmark(Checks& c, Shared& s) {
  const sim::AdServerWorld world;
  s.ads = sim::generate_ad_corpus(world, 250, 7);
  const sim::AdsBenchmarkConfig cfg;
  c.expect(cfg.seed == 7, "ads seed");
  s.ads_split = sim::split_ads(s.ads, cfg.test_fraction, cfg.seed);
  c.expect(s.ads_split->train.size() == 800 && s.ads_split->test.size() == 200,
           "split " + std::to_string(s.ads_split->train.size()) + "/" + std::to_string(s.ads_split->test.size()));

  const auto t0 = Clock::now();
  s.ad_models = sim::train_ad_models(s.ads_split->train, cfg);
  s.ads_summary = sim::evaluate_ad_models(*s.ad_models, s.ads_split->test);
  const double secs = seconds_since(t0);

  int correct = 0;
  for (const auto& cap : s.ads_split->test) correct += sim::cnn_predict_class(s.ad_models->cnn, cap.screenshot) == to_code(*cap.label);
  const double acc = static_cast<double>(correct) / static_cast<double>(s.ads_split->test.size());
  const double centroid =
      oracle::nearest_centroid_accuracy(sim::ad_images(s.ads_split->train), sim::ad_labels(s.ads_split->train),
                                        sim::ad_images(s.ads_split->test), sim::ad_labels(s.ads_split->test), 4);
  c.expect(acc >= 0.90, "cnn accuracy " + fmt(acc));
  c.expect(acc >= centroid, "cnn " + fmt(acc) + " below nearest centroid " + fmt(centroid));
  c.expect(secs < 600.0, "train+eval " + fmt(secs, 1) + " s");
  c.note("cnn " + fmt(acc) + ", nearest centroid " + fmt(centroid) + "; " + fmt(secs, 1) + " s");
}

// ---- 5 ----

struct Predictions {
  std::string method;
  std::vector<int> predicted;
};

void compare_with_oracle(Checks& c, const sim::CountrySummary& summary, const std::vector<std::string>& country,
                         const std::vector<int>& label, const std::vector<Predictions>& preds, const std::string& tag) {
  c.expect(summary.methods.size() == 5, tag + ": " + std::to_string(summary.methods.size()) + " methods");
  for (const auto& p : preds) {
    const auto conf = oracle::confusion_by_country(country, label, p.predicted);
    std::vector<double> acc, prec;
    for (const auto& [_, cf] : conf) {
      acc.push_back(cf.accuracy());
      prec.push_back(cf.precision());
    }
    const auto [ma, sa] = oracle::mean_std(acc);
    const auto [mp, sp] = oracle::mean_std(prec);
    const auto& m = method(summary, p.method);
    const bool ok = std::abs(m.mean_accuracy - ma) <= 1e-12 && std::abs(m.std_accuracy - sa) <= 1e-12 &&
                    std::abs(m.mean_precision - mp) <= 1e-12 && std::abs(m.std_precision - sp) <= 1e-12;
    c.expect(ok, tag + "/" + p.method + " mean/std differ from recomputation");
  }
}

std::pair<int, std::string> run_cli(const std::vector<std::string>& args) {
  std::string cmd = "'" + std::string(SCAMGUARD_CLI_PATH) + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>&1";
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return {-1, out};
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void eval_table(Checks& c, Shared& s) {
  if (!s.call_models || !s.ad_models) throw std::runtime_error("benchmark models missing");

  // independent predictions for every method, scored by the confusion oracle
  const auto& calls_test = s.calls_split->test;
  const auto xc = sim::call_feature_matrix(calls_test, s.call_models->scaling);
  std::vector<std::string> cc;
  for (const auto& call : calls_test) cc.push_back(call.event.region());
  std::vector<Predictions> call_preds{{"dnn", {}}};
  for (Eigen::Index i = 0; i < xc.rows(); ++i)
    call_preds[0].predicted.push_back(nn::dnn_forward(s.call_models->dnn, xc.row(i).transpose()) >= s.call_models->dnn.threshold());
  for (const auto& [name, clf] : s.call_models->baselines) {
    call_preds.push_back({name, {}});
    for (Eigen::Index i = 0; i < xc.rows(); ++i) call_preds.back().predicted.push_back(baselines::predict(clf, xc.row(i).transpose()).cls);
  }

  const auto& ads_test = s.ads_split->test;
  const auto xa = sim::ad_feature_matrix(ads_test);
  std::vector<std::string> ac;
  for (const auto& cap : ads_test) ac.push_back(cap.context.region);
  std::vector<Predictions> ad_preds{{"cnn", {}}};
  for (const auto& cap : ads_test) ad_preds[0].predicted.push_back(sim::cnn_predict_class(s.ad_models->cnn, cap.screenshot));
  for (const auto& [name, ovr] : s.ad_models->baselines) {
    ad_preds.push_back({name, {}});
    for (Eigen::Index i = 0; i < xa.rows(); ++i) ad_preds.back().predicted.push_back(ovr.predict(xa.row(i).transpose()));
  }

  compare_with_oracle(c, *s.calls_summary, cc, sim::call_labels(calls_test), call_preds, "calls");
  compare_with_oracle(c, *s.ads_summary, ac, sim::ad_labels(ads_test), ad_preds, "ads");

  // the same through the command line: data and models on disk, `eval` per task
  const auto root = scratch("eval");
  const auto data = root / "run";
  fs::create_directories(data);
  sim::write_calls_jsonl(data / "calls.jsonl", s.calls);
  sim::write_ads_jsonl(data / "ads.jsonl", s.ads);
  service::ModelRegistry reg(root / "models");
  reg.publish(service::ModelKind::Calls,
              service::ModelRegistry::calls_document(s.call_models->dnn.with_version("dnn-s7"), s.call_models->scaling));
  reg.publish(service::ModelKind::Ads, service::ModelRegistry::ads_document(s.ad_models->cnn.with_version("cnn-s7")));
  for (const auto& [name, clf] : s.call_models->baselines)
    sim::write_text(root / "baselines" / "calls" / (name + ".json"), save_model(clf).dump());
  for (const auto& [name, ovr] : s.ad_models->baselines)
    sim::write_text(root / "baselines" / "ads" / (name + ".json"), save_model(ovr).dump());

  for (const std::string task : {"calls", "ads"}) {
    const auto [code, out] = run_cli({"eval", "--task", task, "--seed", "7", "--data", data.string(), "--out-dir", root.string()});
    c.expect(code == 0, "eval --task " + task + " exit " + std::to_string(code) + ": " + out.substr(0, 200));
    if (code != 0) continue;
    const auto summary = sim::country_summary_from_json(Json::parse(sim::read_text(root / ("summary-" + task + ".json"))));
    if (task == "calls") compare_with_oracle(c, summary, cc, sim::call_labels(calls_test), call_preds, "cli calls");
    else compare_with_oracle(c, summary, ac, sim::ad_labels(ads_test), ad_preds, "cli ads");
    for (const auto& m : summary.methods)
      c.expect(out.find("\n" + m.method + " ") != std::string::npos, "table row " + m.method);
  }
  fs::remove_all(root);
  c.note("calls and ads tables (5 methods, mean/std) match recomputation to 1e-12, in process and via `eval`");
}

// ---- 6 ----

void generator_fidelity(Checks& c, Shared& s) {
  const sim::TrafficConfig cfg;
  std::map<std::int64_t, long> scams_per_day;
  long scams = 0;
  for (const auto& call : s.calls) {
    const bool scam = call.event.label().value_or(false);
    scams += scam;
    if (scam) ++scams_per_day[(call.event.timestamp() - cfg.start) / 86400];
  }
  double weekend = 0, weekday = 0;
  int weekend_days = 0, weekday_days = 0;
  for (int d = 0; d < cfg.days; ++d) {
    // day index 0 is a Monday
    const bool we = d % 7 >= 5;
    (we ? weekend : weekday) += static_cast<double>(scams_per_day[d]);
    ++(we ? weekend_days : weekday_days);
  }
  const double ratio = (weekend / weekend_days) / (weekday / weekday_days);
  const double prevalence = static_cast<double>(scams) / static_cast<double>(s.calls.size());
  c.expect(ratio >= 0.30 && ratio <= 0.37, "weekend ratio " + fmt(ratio));
  c.expect(std::abs(prevalence - 0.10) <= 0.01, "prevalence " + fmt(prevalence));

  sim::AdServerWorld w;
  w.url_count = 20000;
  auto share = [&] {
    int n = 0;
    for (int u = 0; u < w.url_count; ++u) n += sim::is_deceptive_url(w, u);
    return static_cast<double>(n) / w.url_count;
  };
  const double default_share = share();
  c.expect(sim::AdServerWorld{}.deceptive_fraction == 0.21, "default deceptive fraction");
  c.expect(std::abs(default_share - 0.21) <= 0.01, "deceptive share " + fmt(default_share));
  w.deceptive_fraction = 0.5;
  const double half = share();
  c.expect(std::abs(half - 0.5) <= 0.015, "configured share " + fmt(half));
  c.note("weekend/weekday " + fmt(ratio) + ", prevalence " + fmt(prevalence) + ", deceptive share " + fmt(default_share) +
         " (0.5 when configured: " + fmt(half) + ")");
}

// ---- 7 ----

bool same_content(const AdCapture& a, const AdCapture& b) {
  return a.screenshot == b.screenshot && a.page_text == b.page_text && a.html == b.html &&
         a.redirect_chain == b.redirect_chain && a.label == b.label;
}

void flux_and_regions(Checks& c, Shared&) {
  const sim::AdServerWorld w;
  int deceptive = 0, benign = 0;
  for (int u = 0; u < 200; ++u) {
    if (sim::is_deceptive_url(w, u)) {
      ++deceptive;
      for (std::int64_t b : {0, 5, 11}) {
        std::vector<AdCapture> caps;
        for (const auto& r : w.regions) caps.push_back(sim::serve_ad(w, u, {r.region, r.language, b}));
        for (std::size_t i = 0; i < caps.size(); ++i)
          for (std::size_t j = i + 1; j < caps.size(); ++j)
            c.expect(!same_content(caps[i], caps[j]), "url " + std::to_string(u) + " regions share content");
      }
      for (const auto& r : w.regions) {
        int prev = 0;
        for (std::int64_t b = 0; b < 9; ++b) {
          const auto cap = sim::serve_ad(w, u, {r.region, r.language, b});
          const int code = to_code(*cap.label);
          c.expect(*cap.label == sim::template_for(w, u, r.region, b), "template oracle");
          c.expect(code >= 1 && (b == 0 || code == 1 + prev % 3), "rotation url " + std::to_string(u));
          prev = code;
        }
      }
    } else {
      ++benign;
      for (const auto& r : w.regions) {
        const auto first = sim::serve_ad(w, u, {r.region, r.language, 0});
        c.expect(first.label == AdCategory::Benign, "benign label");
        for (std::int64_t b : {1, 2, 3, 17, 111})
          c.expect(same_content(first, sim::serve_ad(w, u, {r.region, r.language, b})), "benign url " + std::to_string(u) + " changes");
      }
    }
  }
  auto dump = [&](std::uint64_t seed) {
    std::string out;
    for (const auto& cap : sim::generate_ad_corpus(w, 25, seed)) out += to_json(cap).dump() + "\n";
    return out;
  };
  const auto a = dump(7);
  c.expect(a == dump(7), "corpus bytes differ for one seed");
  c.expect(a != dump(8), "corpus ignores seed");
  c.note(std::to_string(deceptive) + " deceptive / " + std::to_string(benign) + " benign urls x 8 regions checked");
}

// ---- 8 ----

void oracle_equivalence(Checks& c, Shared& s) {
  std::mt19937_64 rng(31);
  int compared = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const int n = 2 + static_cast<int>(rng() % 31), d = 1 + static_cast<int>(rng() % 4);
    const int min_leaf = 1 + static_cast<int>(rng() % 3);
    const int levels = 2 + static_cast<int>(rng() % 6);
    baselines::Dataset ds{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) ds.x(i, j) = static_cast<double>(rng() % static_cast<std::uint64_t>(levels));
      ds.y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    }
    const auto want = oracle::best_gini_split(ds.x, ds.y, min_leaf);
    const auto tree = baselines::train_tree(ds, {8, min_leaf});
    const auto& root = std::get<baselines::Tree>(tree.params()).nodes.front();
    if (want.feature < 0) {
      c.expect(root.is_leaf(), "instance " + std::to_string(inst) + " split without admissible split");
      continue;
    }
    c.expect(!root.is_leaf() && root.feature == want.feature && root.threshold == want.threshold,
             "instance " + std::to_string(inst) + " root split");
    ++compared;
  }
  c.expect(compared > 100, "too few splitting instances");

  int sets = 0;
  auto check_rows = [&](const std::vector<sim::Outcome>& out) {
    std::vector<std::string> cs;
    std::vector<int> ys, ps;
    for (const auto& o : out) {
      cs.push_back(o.country);
      ys.push_back(o.label);
      ps.push_back(o.predicted);
    }
    const auto want = oracle::confusion_by_country(cs, ys, ps);
    const auto rows = sim::evaluate(out);
    bool ok = rows.size() == want.size();
    auto it = want.begin();
    for (std::size_t i = 0; ok && i < rows.size(); ++i, ++it)
      ok = rows[i].country == it->first && rows[i].n == it->second.n && rows[i].accuracy == it->second.accuracy() &&
           rows[i].precision == it->second.precision();
    c.expect(ok, "evaluate() differs on test set " + std::to_string(sets));
    ++sets;
  };
  const std::vector<std::string> countries = {"US", "IN", "TW", "BR", "IT", "GB", "FR", "DE"};
  for (int inst = 0; inst < 200; ++inst) {
    const int classes = inst % 2 ? 4 : 2;
    std::vector<sim::Outcome> out;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 300); i < n; ++i)
      out.push_back({countries[rng() % 8], static_cast<int>(rng() % classes), static_cast<int>(rng() % classes)});
    check_rows(out);
  }
  // and on the benchmark test sets with every method's predictions
  if (s.call_models) {
    const auto x = sim::call_feature_matrix(s.calls_split->test, s.call_models->scaling);
    const auto y = sim::call_labels(s.calls_split->test);
    for (const auto& [name, clf] : s.call_models->baselines) {
      std::vector<sim::Outcome> out;
      for (std::size_t i = 0; i < y.size(); ++i)
        out.push_back({s.calls_split->test[i].event.region(), y[i], baselines::predict(clf, x.row(static_cast<Eigen::Index>(i)).transpose()).cls});
      check_rows(out);
    }
  }
  if (s.ad_models) {
    const auto x = sim::ad_feature_matrix(s.ads_split->test);
    const auto y = sim::ad_labels(s.ads_split->test);
    for (const auto& [name, ovr] : s.ad_models->baselines) {
      std::vector<sim::Outcome> out;
      for (std::size_t i = 0; i < y.size(); ++i)
        out.push_back({s.ads_split->test[i].context.region, y[i], ovr.predict(x.row(static_cast<Eigen::Index>(i)).transpose())});
      check_rows(out);
    }
  }
  c.note("500 enumerable split instances (" + std::to_string(compared) + " splitting), " + std::to_string(sets) +
         " test sets");
}

// ---- 9 ----

struct Snapshot {
  std::vector<std::string> bodies;
  bool operator==(const Snapshot&) const = default;
};

Snapshot snapshot(const service::DetectionService& svc, const std::vector<std::string>& hashes) {
  Snapshot snap;
  for (const auto& h : hashes) {
    const auto r = svc.number_lookup(h);
    snap.bodies.push_back(std::to_string(r.status) + r.body);
  }
  for (int i = 1; i <= 40; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "rpt-%010d", i);
    const auto r = svc.ad_report(id);
    snap.bodies.push_back(std::to_string(r.status) + r.body);
  }
  snap.bodies.push_back(svc.model_version().body);
  snap.bodies.push_back(svc.client_defense().body);
  return snap;
}

Json archetype(const std::string& hash, Timestamp day) { return to_json(sim::scam_archetype("US", day, hash).event); }

void publish_models(service::DetectionService& svc, const Shared& s) {
  auto& reg = svc.registry();
  reg.publish(service::ModelKind::Calls,
              service::ModelRegistry::calls_document(s.call_models->dnn.with_version("dnn-v1"), s.call_models->scaling));
  reg.publish(service::ModelKind::Calls, service::ModelRegistry::calls_document(nn::DnnModel::zeros(0.6, "dnn-v2"), ScalingSpec{}));
  reg.publish(service::ModelKind::Ads, service::ModelRegistry::ads_document(s.ad_models->cnn.with_version("cnn-v1")));
}

void service_end_to_end(Checks& c, Shared& s) {
  if (!s.call_models || !s.ad_models) throw std::runtime_error("benchmark models missing");
  const auto t0 = Clock::now();
  constexpr Timestamp kDay0 = 1467590400;
  const sim::AdServerWorld world;
  auto source = std::make_shared<service::SimulatedCaptureSource>(world);

  // live service over HTTP
  const auto dir = scratch("service");
  std::atomic<Timestamp> now{kDay0 + 30 * 86400};
  service::DetectionService svc({dir, 1000, [&] { return now.fetch_add(1); }}, source);
  publish_models(svc, s);
  c.expect(svc.activate(R"({"kind":"calls","version":"dnn-v1"})").status == 200, "activate calls");
  c.expect(svc.activate(R"({"kind":"ads","version":"cnn-v1"})").status == 200, "activate ads");
  service::HttpServer server(svc);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  int url = 0;
  while (!sim::is_deceptive_url(world, url)) ++url;
  Json regions = Json::array();
  for (const auto& r : world.regions) regions.push_back(r.region);
  auto res = client.Post("/v1/ads/submit", Json{{"url", sim::ad_url(url)}, {"regions", regions}}.dump(), "application/json");
  int complete = 0;
  c.expect(res && res->status == 200, "ad submission");
  if (res && res->status == 200) {
    const Json submitted = Json::parse(res->body);
    for (const auto& id : submitted.at("report_ids")) {
      auto rep_res = client.Get("/v1/ads/report/" + id.get<std::string>());
      if (!rep_res || rep_res->status != 200) {
        c.expect(false, "report fetch");
        continue;
      }
      const auto rep = service::analysis_report_from_json(Json::parse(rep_res->body));
      bool ok = !rep.report_id.empty() && rep.original_url == canonicalize_url(sim::ad_url(url)) &&
                !rep.destination_url.empty() && rep.captured_at > 0 && !rep.region.empty() && rep.verdict.decision &&
                fs::exists(dir / rep.screenshot_ref);
      if (ok) {
        const auto shot = service::decode_pgm(sim::read_text(dir / rep.screenshot_ref));
        ok = shot.rows() == kScreenshotSize && shot.cols() == kScreenshotSize;
      }
      complete += ok;
    }
  }
  c.expect(complete == static_cast<int>(world.regions.size()), "complete deceptive reports " + std::to_string(complete));

  const auto scam_hash = hash_identifier("+15550109999");
  res = client.Post("/v1/calls/feedback", archetype(scam_hash, kDay0).dump(), "application/json");
  const bool scam_flagged = res && res->status == 200 && Json::parse(res->body).at("decision").get<bool>();
  c.expect(scam_flagged, "scam archetype not flagged");

  // activation flood
  std::atomic<bool> done{false};
  std::atomic<int> failures{0}, torn{0}, toggles{0}, requests{0};
  std::thread toggler([&] {
    httplib::Client t("127.0.0.1", port);
    for (int i = 0; !done; ++i) {
      auto r = t.Post("/v1/model/activate", Json{{"kind", "calls"}, {"version", i % 2 ? "dnn-v1" : "dnn-v2"}}.dump(),
                      "application/json");
      if (!r || r->status != 200) ++failures;
      ++toggles;
    }
  });
  std::vector<std::thread> flood;
  for (int t = 0; t < 100; ++t)
    flood.emplace_back([&, t] {
      httplib::Client cl("127.0.0.1", port);
      cl.set_read_timeout(60, 0);
      const auto h = hash_identifier("+1555020" + std::to_string(1000 + t));
      // keep the flood up until the active version has flipped many times
      for (int k = 0; k < 4 || toggles < 50; ++k) {
        ++requests;
        auto r = k % 2 ? cl.Post("/v1/calls/feedback", archetype(h, kDay0).dump(), "application/json")
                       : cl.Get("/v1/model/version");
        if (!r || r->status != 200) {
          ++failures;
          continue;
        }
        const auto j = Json::parse(r->body);
        const std::string v = k % 2 ? j.at("model_version").get<std::string>() : j.at("calls").get<std::string>();
        if (v != "dnn-v1" && v != "dnn-v2") ++torn;
        if (k % 2 && (v == "dnn-v2") != (j.at("score").get<double>() == 0.5)) ++torn;
      }
    });
  for (auto& t : flood) t.join();
  done = true;
  toggler.join();
  server.stop();
  c.expect(failures == 0, std::to_string(failures) + " failed requests in flood");
  c.expect(torn == 0, std::to_string(torn) + " mixed-version responses in flood");
  c.expect(toggles >= 50, "only " + std::to_string(toggles) + " activations during the flood");

  // crash-replay: state rebuilt from a log prefix (with a torn tail) equals the live state then
  const auto rdir = scratch("replay");
  std::vector<std::string> hashes;
  for (int i = 0; i < 6; ++i) hashes.push_back(hash_identifier("+1555030" + std::to_string(1000 + i)));
  std::vector<Snapshot> after;
  {
    std::atomic<Timestamp> t{kDay0 + 40 * 86400};
    service::DetectionService live({rdir, 1000, [&] { return t.fetch_add(7); }}, source);
    publish_models(live, s);
    after.push_back(snapshot(live, hashes));
    live.activate(R"({"kind":"calls","version":"dnn-v1"})");
    after.push_back(snapshot(live, hashes));
    live.activate(R"({"kind":"ads","version":"cnn-v1"})");
    after.push_back(snapshot(live, hashes));
    std::mt19937_64 rng(51);
    for (int op = 0; op < 40; ++op) {
      const int what = static_cast<int>(rng() % 6);
      int status = 0;
      if (what < 3) {
        const auto& h = hashes[rng() % hashes.size()];
        status = live.call_feedback(archetype(h, kDay0 + static_cast<Timestamp>(rng() % 10) * 86400).dump()).status;
      } else if (what < 5) {
        Json regs = Json::array({world.regions[rng() % 8].region});
        status = live.submit_ad(Json{{"url", sim::ad_url(static_cast<int>(rng() % 50))}, {"regions", regs}}.dump()).status;
      } else {
        status = live.activate(Json{{"kind", "calls"}, {"version", rng() % 2 ? "dnn-v1" : "dnn-v2"}}.dump()).status;
      }
      c.expect(status == 200, "replay op " + std::to_string(op));
      after.push_back(snapshot(live, hashes));
    }
  }
  std::vector<std::string> lines;
  {
    std::ifstream in(rdir / "events.log");
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }
  c.expect(lines.size() + 1 == after.size(), "one log record per state change");
  std::mt19937_64 rng(52);
  int replays = 0;
  for (int trial = 0; trial < 12 && lines.size() + 1 == after.size(); ++trial) {
    const std::size_t k = trial == 0 ? lines.size() : rng() % (lines.size() + 1);
    const auto copy = scratch("replay-copy");
    fs::copy(rdir, copy, fs::copy_options::recursive);
    std::string text;
    for (std::size_t i = 0; i < k; ++i) text += lines[i] + "\n";
    if (k < lines.size()) text += lines[k].substr(0, 1 + rng() % (lines[k].size() - 2));
    std::ofstream(copy / "events.log", std::ios::binary | std::ios::trunc) << text;
    service::DetectionService replayed({copy, 1000, [] { return Timestamp{0}; }}, source);
    c.expect(snapshot(replayed, hashes) == after[k], "replay of prefix " + std::to_string(k) + " differs");
    fs::remove_all(copy);
    ++replays;
  }
  fs::remove_all(rdir);
  fs::remove_all(dir);

  const double secs = seconds_since(t0);
  c.expect(secs < 600.0, "service run " + fmt(secs, 1) + " s");
  c.note(std::to_string(complete) + " complete reports, archetype flagged, " + std::to_string(requests.load()) + " requests from 100 clients over " +
         std::to_string(toggles.load()) + " activations, " + std::to_string(replays) + " torn-log replays; " +
         fmt(secs, 1) + " s");
}

// ---- 10 ----

template <typename M>
M reload(const M& m) {
  return std::get<M>(load_model_text(save_model(m).dump()));
}

void serialization(Checks& c, Shared& s) {
  if (!s.call_models || !s.ad_models) throw std::runtime_error("benchmark models missing");
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  auto vec = [&](Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (auto& x : v) x = u(rng);
    return v;
  };
  int kinds = 0;

  const auto dnn = reload(s.call_models->dnn);
  bool ok = dnn == s.call_models->dnn;
  for (int i = 0; i < 100; ++i) {
    const auto x = vec(kCallFeatureDim);
    ok = ok && same_bits(nn::dnn_forward(dnn, x), nn::dnn_forward(s.call_models->dnn, x));
  }
  c.expect(ok, "dnn");
  ++kinds;

  const auto cnn = reload(s.ad_models->cnn);
  ok = cnn == s.ad_models->cnn;
  for (int i = 0; i < 100; ++i) {
    Raster img(kScreenshotSize, kScreenshotSize);
    for (auto& v : img.reshaped()) v = u(rng);
    const Eigen::Vector4d a = nn::cnn_forward(cnn, img), b = nn::cnn_forward(s.ad_models->cnn, img);
    for (int k = 0; k < 4; ++k) ok = ok && same_bits(a[k], b[k]);
  }
  c.expect(ok, "cnn");
  ++kinds;

  for (const auto& [name, clf] : s.call_models->baselines) {
    const auto back = reload(clf);
    ok = back == clf;
    for (int i = 0; i < 100; ++i) {
      const auto x = vec(clf.dim());
      const auto a = baselines::predict(clf, x), b = baselines::predict(back, x);
      ok = ok && a.cls == b.cls && same_bits(a.score, b.score);
    }
    c.expect(ok, name);
    ++kinds;
  }
  for (const auto& [name, ovr] : s.ad_models->baselines) {
    const auto back = reload(ovr);
    ok = back == ovr;
    for (int i = 0; i < 100; ++i) {
      const auto x = vec(kAdFlatDim);
      const Eigen::VectorXd a = ovr.scores(x), b = back.scores(x);
      ok = ok && ovr.predict(x) == back.predict(x);
      for (Eigen::Index k = 0; k < a.size(); ++k) ok = ok && same_bits(a[k], b[k]);
    }
    c.expect(ok, "one-vs-rest " + name);
    ++kinds;
  }
  c.note(std::to_string(kinds) + " trained models (dnn, cnn, 4 binary, 4 one-vs-rest) x 100 inputs bit-exact");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    void (*run)(Checks&, Shared&);
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradients},
      {2, "architecture lock", architecture_lock},
      {3, "calls benchmark gate", calls_benchmark},
      {4, "ads benchmark gate", ads_benchmark},
      {5, "evaluation table reproduction", eval_table},
      {6, "generator fidelity", generator_fidelity},
      {7, "fast-flux and region properties", flux_and_regions},
      {8, "oracle equivalence", oracle_equivalence},
      {9, "service end to end", service_end_to_end},
      {10, "serialization", serialization},
  };
  Shared shared;
  int failed = 0;
  const auto start = Clock::now();
  for (const auto& cr : criteria) {
    Checks checks;
    const auto t0 = Clock::now();
    try {
      cr.run(checks, shared);
    } catch (const std::exception& e) {
      checks.failed.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = checks.failed.empty();
    failed += !pass;
    std::string detail;
    for (const auto& n : checks.notes) detail += (detail.empty() ? "" : "; ") + n;
    for (std::size_t i = 0; i < checks.failed.size() && i < 5; ++i) detail += " | FAILED: " + checks.failed[i];
    if (checks.failed.size() > 5) detail += " | (+" + std::to_string(checks.failed.size() - 5) + " more)";
    std::printf("%s  [%2d] %-32s (%6.1f s)  %s\n", pass ? "PASS" : "FAIL", cr.id, cr.name, seconds_since(t0), detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              seconds_since(start));
  return failed == 0 ? 0 : 1;
}
