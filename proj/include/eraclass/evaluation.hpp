#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eraclass/corpus.hpp"
#include "json.hpp"

namespace eraclass {

inline constexpr double kZ95 = 1.96;

/// Rows are actual classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // classes * classes, row-major

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t k) : classes(k), counts(k * k, 0) {}

  std::size_t& at(std::size_t actual, std::size_t predicted) { return counts[actual * classes + predicted]; }
  std::size_t at(std::size_t actual, std::size_t predicted) const { return counts[actual * classes + predicted]; }
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;  // 0 for an empty matrix

  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws std::invalid_argument on a length mismatch or out-of-range label.
ConfusionMatrix make_confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                               std::size_t classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;  // mean of per-class F1, not F1 of the macro P and R
  std::vector<ClassMetrics> per_class;
  double interval95 = 0.0;  // half-width of the accuracy interval
  std::size_t n = 0;
  ConfusionMatrix confusion;
};

// Per-class P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R), each 0 when its
// denominator is 0.
ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c);
EvalReport report_from_confusion(const ConfusionMatrix& cm, double z = kZ95);
// Throws std::invalid_argument on empty input, a length mismatch or an
// out-of-range label.
EvalReport compute_metrics(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                           std::size_t classes, double z = kZ95);

// z * sqrt(p (1 - p) / n).
double significance_interval(double p, std::size_t n, double z = kZ95);

struct Comparison {
  bool significant = false;
  double difference = 0.0;  // |pA - pB|
  double margin = 0.0;      // z * sqrt(pA(1-pA)/n + pB(1-pB)/n)
};

// Difference of two proportions on a shared test set; throws
// std::invalid_argument when the test sizes differ.
Comparison compare_classifiers(const EvalReport& a, const EvalReport& b, double z = kZ95);

// Accuracy after summing the confusion over blocks of adjacent classes.
// `groups` must be an ordered partition into consecutive runs.
ConfusionMatrix merge_confusion(const ConfusionMatrix& cm, const std::vector<std::vector<std::size_t>>& groups);
double merged_accuracy(const ConfusionMatrix& cm, const std::vector<std::vector<std::size_t>>& groups);

// Per-era token counts over a labelled corpus (usually the training split).
using EraTokenCounts = std::vector<std::unordered_map<std::string, std::size_t>>;
EraTokenCounts era_token_counts(const std::vector<Sample>& samples, std::size_t eras);

// For each era, the sum over the sample's tokens (with repeats) of that
// token's count in the era.
std::vector<std::size_t> word_freq_by_era(const std::vector<std::string>& tokens, const EraTokenCounts& counts);

// Stable key order; `labels` names the classes in the per-class list.
nlohmann::ordered_json to_json(const EvalReport& r, const std::vector<std::string>& labels);
EvalReport report_from_json(const nlohmann::json& j);

std::vector<std::vector<double>> row_normalized(const ConfusionMatrix& cm);

// Header row "actual\predicted,<labels...>", then one row per actual label.
// With `normalize`, cells are row fractions printed to 6 decimals.
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels, bool normalize = false);
// Parses a count CSV written by confusion_csv; fills `labels` when given.
ConfusionMatrix parse_confusion_csv(std::string_view csv, std::vector<std::string>* labels = nullptr);

// Standalone SVG heatmap with a value label in every cell; colour follows
// the row-normalized fraction.
std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& labels, bool normalize);

}  // namespace eraclass
