#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scamguard/domain.hpp"

namespace scamguard::sim {

/// One scored test sample. Class 0 is the negative class; every other class
/// counts as positive for precision (so 4-class ad predictions collapse to
/// deceptive vs benign), while accuracy needs the exact class.
struct Outcome {
  std::string country;
  int label = 0;
  int predicted = 0;
};

struct MetricsRow {
  std::string country;
  double accuracy = 0.0;
  double precision = 1.0;  // 1.0 when nothing was predicted positive
  std::int64_t n = 0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Rows sorted by country code. Throws EmptySplit on no outcomes.
std::vector<MetricsRow> evaluate(std::span<const Outcome> outcomes);

struct MethodSummary {
  std::string method;
  std::vector<MetricsRow> rows;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population
  double mean_precision = 0.0;
  double std_precision = 0.0;
};

struct CountrySummary {
  std::string task;
  std::vector<MethodSummary> methods;
};

struct MethodRows {
  std::string method;
  std::vector<MetricsRow> rows;
};

/// Throws EmptySplit when a method has no rows.
CountrySummary cross_country_summary(std::string task, std::vector<MethodRows> per_method);

Json to_json(const CountrySummary& s);
CountrySummary country_summary_from_json(const Json& j);

/// Methods x {mean, std} for accuracy and precision, then the per-country grid.
std::string format_table(const CountrySummary& s);

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split; each class contributes round(test_fraction * size)
/// to the test side (at least one when the class has two or more members).
TrainTestSplit stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

}  // namespace scamguard::sim
