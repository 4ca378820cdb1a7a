#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "eraclass/baselines.hpp"
#include "eraclass/error.hpp"
#include "eraclass/features.hpp"
#include "eraclass/rng.hpp"
#include "oracles.hpp"

using namespace eraclass;

namespace {

FeatureMatrix fixture_tfidf() {
  const auto docs = oracle::fixture_docs();
  const auto vocab = build_vocab(docs, VocabUnit::word, 100);
  const auto idf = fit_idf(docs, vocab);
  FeatureMatrix x;
  x.kind = FeatureKind::tfidf;
  x.cols = vocab.size();
  for (const auto& d : docs) {
    const auto v = tfidf_vector(d, vocab, idf);
    x.values.insert(x.values.end(), v.begin(), v.end());
    ++x.rows;
  }
  return x;
}

std::vector<std::size_t> binary_labels() { return {0, 0, 0, 0, 0, 1, 1, 1, 1}; }

}  // namespace

TEST(LogReg, ObjectiveMatchesOracle) {
  const auto x = fixture_tfidf();
  Rng rng(4);
  for (std::size_t classes : {2u, 3u}) {
    const auto y = classes == 2 ? binary_labels() : oracle::fixture_labels();
    const std::size_t k = classes == 2 ? 1 : classes;
    std::vector<double> theta((x.cols + 1) * k);
    for (double& t : theta) t = rng.uniform(-1.0, 1.0);
    std::vector<double> grad, oracle_grad;
    const double f = logreg_objective(x, y, classes, 0.5, theta, &grad);
    const double fo = oracle::logreg_objective(x.values, x.rows, x.cols, y, classes, 0.5, theta, oracle_grad);
    EXPECT_NEAR(f, fo, 1e-12);
    for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad[i], oracle_grad[i], 1e-12);
  }
}

TEST(LogReg, FitReachesGradientDescentMinimum) {
  const auto x = fixture_tfidf();
  for (std::size_t classes : {2u, 3u}) {
    for (double C : {0.1, 1.0, 10.0}) {
      const auto y = classes == 2 ? binary_labels() : oracle::fixture_labels();
      LogRegSpec spec;
      spec.C = C;
      spec.tolerance = 1e-9;
      const auto fit = logreg_fit(x, y, classes, spec);
      EXPECT_TRUE(fit.converged);
      const double oracle_min = oracle::logreg_gd_minimum(x.values, x.rows, x.cols, y, classes, C);
      EXPECT_NEAR(fit.objective_trace.back(), oracle_min, 1e-6) << "classes " << classes << " C " << C;
      // Non-increasing objective along the accepted iterates.
      for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] + 1e-15);
      }
    }
  }
}

TEST(LogReg, ObjectiveIsConvexAlongSegments) {
  const auto x = fixture_tfidf();
  const auto y = oracle::fixture_labels();
  Rng rng(8);
  const std::size_t n = (x.cols + 1) * 3;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(n), b(n), mid(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-3.0, 3.0);
      b[i] = rng.uniform(-3.0, 3.0);
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    const double fa = logreg_objective(x, y, 3, 1.0, a);
    const double fb = logreg_objective(x, y, 3, 1.0, b);
    EXPECT_LE(logreg_objective(x, y, 3, 1.0, mid), 0.5 * (fa + fb) + 1e-12);
  }
}

TEST(LogReg, StrongPenaltyGivesPriorProbabilities) {
  const auto x = fixture_tfidf();
  const std::vector<std::size_t> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  FeatureMatrix x10 = x;
  x10.values.insert(x10.values.end(), x.values.begin(), x.values.begin() + static_cast<std::ptrdiff_t>(x.cols));
  ++x10.rows;
  LogRegSpec spec;
  spec.C = 1e-8;
  const auto fit = logreg_fit(x10, y, 2, spec);
  const Tensor p = fit.model.predict_proba(x10);
  for (std::size_t r = 0; r < x10.rows; ++r) EXPECT_NEAR(p[r], 0.5, 1e-6);
}

TEST(LogReg, SeparableDataClassifiedPerfectly) {
  const auto x = fixture_tfidf();
  const auto y = oracle::fixture_labels();
  LogRegSpec spec;
  spec.C = 100.0;
  const auto fit = logreg_fit(x, y, 3, spec);
  EXPECT_EQ(fit.model.predict(x), y);
  const Tensor p = fit.model.predict_proba(x);
  for (std::size_t r = 0; r < x.rows; ++r) {
    EXPECT_NEAR(p.at(r, 0) + p.at(r, 1) + p.at(r, 2), 1.0, 1e-12);
  }
}

TEST(LogReg, CheckpointRoundTripAndSpecValidation) {
  const auto x = fixture_tfidf();
  const auto fit = logreg_fit(x, binary_labels(), 2, LogRegSpec{});
  const auto back = logreg_from_checkpoint(decode_checkpoint(encode_checkpoint(to_checkpoint(fit.model))));
  EXPECT_EQ(back.params(), fit.model.params());
  EXPECT_EQ(back.num_classes(), 2u);
  EXPECT_EQ(back.predict_proba(x), fit.model.predict_proba(x));
  LogRegSpec bad;
  bad.C = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Cnn, SpecShapesAndValidation) {
  CnnSpec cnn;
  cnn.embedding_dim = 4;
  cnn.filters = 3;
  cnn.kernel_width = 2;
  cnn.dense_widths = {5};
  const ModelSpec spec = cnn_spec(cnn, 3, 10, 6);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_TRUE(spec.sequence_input());
  Model m(spec, 6);
  FeatureMatrix x;
  x.rows = 2;
  x.cols = 6;
  x.values = {2, 3, 4, 5, 0, 0, 9, 8, 7, 0, 0, 0};
  const Tensor p = m.predict_proba(x);
  EXPECT_EQ(p.shape(), (std::vector<std::size_t>{2, 3}));
  cnn.kernel_width = 7;
  EXPECT_THROW(cnn_spec(cnn, 3, 10, 6), ConfigError);
}

TEST(Cnn, LearnsPositionFreeKeyword) {
  // Class 1 iff token 5 appears anywhere.
  Rng rng(12);
  FeatureMatrix x;
  x.cols = 8;
  std::vector<std::size_t> y;
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    std::vector<double> row(8);
    for (double& v : row) v = static_cast<double>(2 + rng.uniform_index(3));
    if (pos) row[rng.uniform_index(8)] = 5.0;
    x.values.insert(x.values.end(), row.begin(), row.end());
    ++x.rows;
    y.push_back(pos ? 1 : 0);
  }
  CnnSpec cnn;
  // Very few filters can stall on a plateau; 32 leaves enough redundancy.
  cnn.embedding_dim = 16;
  cnn.filters = 32;
  cnn.kernel_width = 2;
  ModelSpec spec = cnn_spec(cnn, 2, 6, 8);
  spec.seed = 1;
  spec.batch_size = 20;
  spec.epochs = 40;
  spec.optimizer.learning_rate = 0.01;
  Model m(spec, 8);
  const auto h = m.fit(x, y, x, y);
  EXPECT_DOUBLE_EQ(h.best_val_accuracy, 1.0);
}
