#include "scamguard/sim/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "scamguard/rng.hpp"

namespace scamguard::sim {

namespace {

std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

std::string fmt(const char* f, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

}  // namespace

std::vector<MetricsRow> evaluate(std::span<const Outcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorKind::EmptySplit, "no test samples to evaluate");
  struct Counts {
    std::int64_t n = 0, correct = 0, tp = 0, fp = 0;
  };
  std::map<std::string, Counts> by_country;
  for (const auto& o : outcomes) {
    auto& c = by_country[o.country];
    ++c.n;
    if (o.label == o.predicted) ++c.correct;
    if (o.predicted != 0) ++(o.label != 0 ? c.tp : c.fp);
  }
  std::vector<MetricsRow> rows;
  for (const auto& [country, c] : by_country) {
    MetricsRow r;
    r.country = country;
    r.n = c.n;
    r.accuracy = static_cast<double>(c.correct) / static_cast<double>(c.n);
    r.precision = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    rows.push_back(r);
  }
  return rows;
}

CountrySummary cross_country_summary(std::string task, std::vector<MethodRows> per_method) {
  CountrySummary s;
  s.task = std::move(task);
  for (auto& m : per_method) {
    if (m.rows.empty()) throw Error(ErrorKind::EmptySplit, "method " + m.method + " has no rows");
    MethodSummary ms;
    ms.method = std::move(m.method);
    ms.rows = std::move(m.rows);
    std::vector<double> acc, prec;
    for (const auto& r : ms.rows) {
      acc.push_back(r.accuracy);
      prec.push_back(r.precision);
    }
    std::tie(ms.mean_accuracy, ms.std_accuracy) = mean_and_std(acc);
    std::tie(ms.mean_precision, ms.std_precision) = mean_and_std(prec);
    s.methods.push_back(std::move(ms));
  }
  return s;
}

Json to_json(const CountrySummary& s) {
  Json methods = Json::array();
  for (const auto& m : s.methods) {
    Json rows = Json::array();
    for (const auto& r : m.rows)
      rows.push_back({{"country", r.country}, {"accuracy", r.accuracy}, {"precision", r.precision}, {"n", r.n}});
    methods.push_back({{"method", m.method},
                       {"mean_accuracy", m.mean_accuracy},
                       {"std_accuracy", m.std_accuracy},
                       {"mean_precision", m.mean_precision},
                       {"std_precision", m.std_precision},
                       {"rows", rows}});
  }
  return {{"task", s.task},
          {"std_kind", "population"},
          {"precision_convention", "precision is 1.0 when no sample is predicted positive"},
          {"methods", methods}};
}

CountrySummary country_summary_from_json(const Json& j) {
  try {
    CountrySummary s;
    s.task = j.at("task").get<std::string>();
    for (const auto& m : j.at("methods")) {
      MethodSummary ms;
      ms.method = m.at("method").get<std::string>();
      ms.mean_accuracy = m.at("mean_accuracy").get<double>();
      ms.std_accuracy = m.at("std_accuracy").get<double>();
      ms.mean_precision = m.at("mean_precision").get<double>();
      ms.std_precision = m.at("std_precision").get<double>();
      for (const auto& r : m.at("rows"))
        ms.rows.push_back({r.at("country").get<std::string>(), r.at("accuracy").get<double>(),
                           r.at("precision").get<double>(), r.at("n").get<std::int64_t>()});
      s.methods.push_back(std::move(ms));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("summary: ") + e.what());
  }
}

std::string format_table(const CountrySummary& s) {
  std::string out = "task: " + s.task + "  (std = population std across countries; precision = 1.0 when nothing is predicted positive)\n";
  out += pad("method", 10) + pad("mean_acc", 11) + pad("std_acc", 11) + pad("mean_prec", 11) + "std_prec\n";
  for (const auto& m : s.methods)
    out += pad(m.method, 10) + pad(fmt("%.4f", m.mean_accuracy), 11) + pad(fmt("%.4f", m.std_accuracy), 11) +
           pad(fmt("%.4f", m.mean_precision), 11) + fmt("%.4f", m.std_precision) + "\n";

  std::set<std::string> countries;
  for (const auto& m : s.methods)
    for (const auto& r : m.rows) countries.insert(r.country);
  out += "\naccuracy by country\n" + pad("method", 10);
  for (const auto& c : countries) out += pad(c, 8);
  out += "\n";
  for (const auto& m : s.methods) {
    out += pad(m.method, 10);
    for (const auto& c : countries) {
      auto it = std::find_if(m.rows.begin(), m.rows.end(), [&](const MetricsRow& r) { return r.country == c; });
      out += pad(it == m.rows.end() ? "-" : fmt("%.4f", it->accuracy), 8);
    }
    out += "\n";
  }
  return out;
}

TrainTestSplit stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorKind::InvalidValue, "test_fraction must be in (0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(mix64({seed, 0x5b117ULL}));
  TrainTestSplit split;
  for (auto& [cls, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    auto k = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    if (k == 0 && idx.size() >= 2) k = 1;
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace scamguard::sim
