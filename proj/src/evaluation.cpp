#include "eraclass/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "eraclass/error.hpp"
#include "eraclass/periodization.hpp"
#include "io_util.hpp"

namespace eraclass {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < classes; ++i) t += at(i, i);
  return t;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t t = total();
  return t ? static_cast<double>(trace()) / static_cast<double>(t) : 0.0;
}

ConfusionMatrix make_confusion(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                               std::size_t classes) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("actual and predicted lengths differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= classes || predicted[i] >= classes) {
      throw std::invalid_argument("label out of range for " + std::to_string(classes) + " classes");
    }
    ++cm.at(actual[i], predicted[i]);
  }
  return cm;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (std::size_t k = 0; k < cm.classes; ++k) {
    predicted += cm.at(k, c);
    actual += cm.at(c, k);
  }
  ClassMetrics m;
  const double tp = static_cast<double>(cm.at(c, c));
  m.precision = ratio(tp, static_cast<double>(predicted));
  m.recall = ratio(tp, static_cast<double>(actual));
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.support = actual;
  return m;
}

EvalReport report_from_confusion(const ConfusionMatrix& cm, double z) {
  EvalReport r;
  r.confusion = cm;
  r.n = cm.total();
  r.accuracy = cm.accuracy();
  for (std::size_t c = 0; c < cm.classes; ++c) {
    r.per_class.push_back(class_metrics(cm, c));
    r.macro_precision += r.per_class.back().precision;
    r.macro_recall += r.per_class.back().recall;
    r.macro_f1 += r.per_class.back().f1;
  }
  if (cm.classes) {
    const auto k = static_cast<double>(cm.classes);
    r.macro_precision /= k;
    r.macro_recall /= k;
    r.macro_f1 /= k;
  }
  r.interval95 = r.n ? significance_interval(r.accuracy, r.n, z) : 0.0;
  return r;
}

EvalReport compute_metrics(std::span<const std::size_t> actual, std::span<const std::size_t> predicted,
                           std::size_t classes, double z) {
  if (actual.empty()) throw std::invalid_argument("compute_metrics: no samples");
  return report_from_confusion(make_confusion(actual, predicted, classes), z);
}

double significance_interval(double p, std::size_t n, double z) {
  if (n == 0) throw std::invalid_argument("significance_interval: n must be positive");
  return z * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

Comparison compare_classifiers(const EvalReport& a, const EvalReport& b, double z) {
  if (a.n != b.n || a.n == 0) throw std::invalid_argument("compare_classifiers: test set sizes differ");
  const auto n = static_cast<double>(a.n);
  Comparison c;
  c.difference = std::abs(a.accuracy - b.accuracy);
  c.margin = z * std::sqrt(a.accuracy * (1.0 - a.accuracy) / n + b.accuracy * (1.0 - b.accuracy) / n);
  c.significant = c.difference > c.margin;
  return c;
}

ConfusionMatrix merge_confusion(const ConfusionMatrix& cm, const std::vector<std::vector<std::size_t>>& groups) {
  validate_adjacent_groups(groups, cm.classes);
  std::vector<std::size_t> group_of(cm.classes);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t c : groups[g]) group_of[c] = g;
  }
  ConfusionMatrix out(groups.size());
  for (std::size_t a = 0; a < cm.classes; ++a) {
    for (std::size_t p = 0; p < cm.classes; ++p) out.at(group_of[a], group_of[p]) += cm.at(a, p);
  }
  return out;
}

double merged_accuracy(const ConfusionMatrix& cm, const std::vector<std::vector<std::size_t>>& groups) {
  return merge_confusion(cm, groups).accuracy();
}

EraTokenCounts era_token_counts(const std::vector<Sample>& samples, std::size_t eras) {
  EraTokenCounts counts(eras);
  for (const auto& s : samples) {
    if (!s.label || *s.label >= eras) continue;
    for (const auto& t : s.tokens) ++counts[*s.label][t];
  }
  return counts;
}

std::vector<std::size_t> word_freq_by_era(const std::vector<std::string>& tokens, const EraTokenCounts& counts) {
  std::vector<std::size_t> out(counts.size(), 0);
  for (std::size_t e = 0; e < counts.size(); ++e) {
    for (const auto& t : tokens) {
      const auto it = counts[e].find(t);
      if (it != counts[e].end()) out[e] += it->second;
    }
  }
  return out;
}

ordered_json to_json(const EvalReport& r, const std::vector<std::string>& labels) {
  ordered_json per_class = ordered_json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    per_class.push_back({{"label", c < labels.size() ? labels[c] : std::to_string(c)},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  ordered_json rows = ordered_json::array();
  for (std::size_t a = 0; a < r.confusion.classes; ++a) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < r.confusion.classes; ++p) row.push_back(r.confusion.at(a, p));
    rows.push_back(row);
  }
  ordered_json j;
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["interval95"] = r.interval95;
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  j["zero_denominator_convention"] = "precision, recall and f1 are 0 when their denominator is 0";
  j["per_class"] = per_class;
  j["confusion"] = {{"labels", labels}, {"counts", rows}};
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.n = j.at("n").get<std::size_t>();
  r.accuracy = j.at("accuracy").get<double>();
  r.interval95 = j.at("interval95").get<double>();
  r.macro_precision = j.at("macro_precision").get<double>();
  r.macro_recall = j.at("macro_recall").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  for (const auto& c : j.at("per_class")) {
    r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>(),
                           c.at("support").get<std::size_t>()});
  }
  const auto& rows = j.at("confusion").at("counts");
  r.confusion = ConfusionMatrix(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (rows[a].size() != rows.size()) throw DataError("confusion matrix in report is not square");
    for (std::size_t p = 0; p < rows.size(); ++p) r.confusion.at(a, p) = rows[a][p].get<std::size_t>();
  }
  return r;
}

std::vector<std::vector<double>> row_normalized(const ConfusionMatrix& cm) {
  std::vector<std::vector<double>> out(cm.classes, std::vector<double>(cm.classes, 0.0));
  for (std::size_t a = 0; a < cm.classes; ++a) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < cm.classes; ++p) row += cm.at(a, p);
    for (std::size_t p = 0; p < cm.classes; ++p) {
      out[a][p] = ratio(static_cast<double>(cm.at(a, p)), static_cast<double>(row));
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels, bool normalize) {
  if (labels.size() != cm.classes) throw std::invalid_argument("confusion_csv: label count mismatch");
  const auto frac = normalize ? row_normalized(cm) : std::vector<std::vector<double>>{};
  std::string out = "actual\\predicted";
  for (const auto& l : labels) out += "," + csv_field(l);
  out += "\n";
  for (std::size_t a = 0; a < cm.classes; ++a) {
    out += csv_field(labels[a]);
    for (std::size_t p = 0; p < cm.classes; ++p) {
      out += ",";
      out += normalize ? fixed(frac[a][p], 6) : std::to_string(cm.at(a, p));
    }
    out += "\n";
  }
  return out;
}

ConfusionMatrix parse_confusion_csv(std::string_view csv, std::vector<std::string>* labels) {
  std::vector<std::vector<std::string>> rows;
  for (auto line : detail::lines(csv)) {
    if (detail::is_comment_or_blank(line)) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw DataError("empty confusion CSV");
  const std::size_t k = rows.front().size() - 1;
  if (rows.size() != k + 1) throw DataError("confusion CSV is not square");
  ConfusionMatrix cm(k);
  if (labels) labels->assign(rows.front().begin() + 1, rows.front().end());
  for (std::size_t a = 0; a < k; ++a) {
    if (rows[a + 1].size() != k + 1) throw DataError("confusion CSV row " + std::to_string(a + 1) + " has wrong width");
    for (std::size_t p = 0; p < k; ++p) {
      try {
        std::size_t used = 0;
        cm.at(a, p) = std::stoull(rows[a + 1][p + 1], &used);
        if (used != rows[a + 1][p + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError("confusion CSV cell '" + rows[a + 1][p + 1] + "' is not a count");
      }
    }
  }
  return cm;
}

std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& labels, bool normalize) {
  if (labels.size() != cm.classes) throw std::invalid_argument("confusion_svg: label count mismatch");
  constexpr int cell = 64;
  constexpr int left = 180;
  constexpr int top = 150;
  const int k = static_cast<int>(cm.classes);
  const int width = left + k * cell + 20;
  const int height = top + k * cell + 40;
  const auto frac = row_normalized(cm);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + k * cell / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">Predicted</text>\n";
  svg << "<text x=\"16\" y=\"" << top + k * cell / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << top + k * cell / 2 << ")\">Actual</text>\n";
  for (int i = 0; i < k; ++i) {
    const std::string label = xml_escape(labels[static_cast<std::size_t>(i)]);
    const int cx = left + i * cell + cell / 2;
    svg << "<text x=\"" << cx << "\" y=\"" << top - 8 << "\" text-anchor=\"start\" transform=\"rotate(-45 " << cx << " "
        << top - 8 << ")\">" << label << "</text>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << top + i * cell + cell / 2 + 4 << "\" text-anchor=\"end\">" << label
        << "</text>\n";
  }
  for (int a = 0; a < k; ++a) {
    for (int p = 0; p < k; ++p) {
      const double f = frac[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)];
      // White to dark blue.
      const int r = static_cast<int>(std::lround(255 - f * (255 - 8)));
      const int g = static_cast<int>(std::lround(255 - f * (255 - 48)));
      const int b = static_cast<int>(std::lround(255 - f * (255 - 107)));
      const int x = left + p * cell;
      const int y = top + a * cell;
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << r << "," << g << "," << b << ")\" stroke=\"#999\"/>\n";
      const std::string value = normalize ? fixed(f, 2)
                                          : std::to_string(cm.at(static_cast<std::size_t>(a), static_cast<std::size_t>(p)));
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (f > 0.5 ? "white" : "black") << "\">" << value << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace eraclass
