#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "scamguard/model_io.hpp"
#include "scamguard/nn/training.hpp"
#include "scamguard/sim/synthetic.hpp"

using namespace scamguard;
using namespace scamguard::baselines;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g(0.5, 0.5);
  Eigen::VectorXd v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

Dataset nine_dim(std::uint64_t seed) {
  auto d = sim::pad_features(sim::make_xor_dataset(120, seed), 9);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    for (Eigen::Index j = 2; j < 9; ++j) d.x(i, j) = u(rng);
  return d;
}

template <typename M>
M reload(const M& m) {
  const std::string text = save_model(m).dump(2);
  return std::get<M>(load_model_text(text));
}

void expect_classifier_bit_exact(const Classifier& c) {
  const auto back = reload(c);
  EXPECT_EQ(back, c);
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vector(rng, c.dim());
    const auto a = predict(c, x), b = predict(back, x);
    EXPECT_EQ(a.cls, b.cls);
    EXPECT_TRUE(same_bits(a.score, b.score));
  }
}

ErrorKind load_kind(const std::string& text) {
  try {
    load_model_text(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST(ModelIo, DnnRoundTripBitExact) {
  Rng init(3);
  const auto m = nn::init_dnn(init).with_version("dnn-test");
  const auto back = reload(m);
  EXPECT_EQ(back, m);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vector(rng, 9);
    EXPECT_TRUE(same_bits(nn::dnn_forward(m, x), nn::dnn_forward(back, x)));
  }
}

TEST(ModelIo, CnnRoundTripBitExact) {
  Rng init(4);
  const auto m = nn::init_cnn(init).with_version("cnn-test");
  const auto back = reload(m);
  EXPECT_EQ(back, m);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 100; ++i) {
    Raster img(32, 32);
    for (auto& v : img.reshaped()) v = u(rng);
    const Eigen::Vector4d a = nn::cnn_forward(m, img), b = nn::cnn_forward(back, img);
    for (int k = 0; k < 4; ++k) EXPECT_TRUE(same_bits(a[k], b[k]));
  }
}

TEST(ModelIo, BaselinesRoundTripBitExact) {
  const auto d = nine_dim(5);
  expect_classifier_bit_exact(train_logreg(d));
  expect_classifier_bit_exact(train_svm(d));
  expect_classifier_bit_exact(train_tree(d));
  ForestOptions fo;
  fo.n_trees = 7;
  fo.seed = 9;
  expect_classifier_bit_exact(train_forest(d, fo));
}

TEST(ModelIo, OneVsRestRoundTripBitExact) {
  Dataset d{Eigen::MatrixXd(90, 3), std::vector<int>(90)};
  std::mt19937_64 rng(6);
  for (int i = 0; i < 90; ++i) {
    d.y[static_cast<std::size_t>(i)] = i % 3;
    d.x.row(i) = random_vector(rng, 3).transpose();
    d.x(i, i % 3) += 2.0;
  }
  const auto ovr = train_one_vs_rest(d, 3, [](const Dataset& b) { return train_tree(b); });
  const auto back = reload(ovr);
  EXPECT_EQ(back, ovr);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vector(rng, 3);
    EXPECT_EQ(ovr.predict(x), back.predict(x));
    const Eigen::VectorXd a = ovr.scores(x), b = back.scores(x);
    for (Eigen::Index k = 0; k < a.size(); ++k) EXPECT_TRUE(same_bits(a[k], b[k]));
  }
}

TEST(ModelIo, TruncatedDocumentIsSchemaMismatch) {
  Rng init(8);
  const std::string text = save_model(nn::init_dnn(init)).dump();
  for (std::size_t cut : {std::size_t{0}, std::size_t{1}, text.size() / 3, text.size() / 2, text.size() - 1})
    EXPECT_EQ(load_kind(text.substr(0, cut)), ErrorKind::SchemaMismatch) << "cut " << cut;

  auto doc = save_model(nn::init_dnn(init));
  doc["layers"].erase(doc["layers"].size() - 1);
  EXPECT_EQ(load_kind(doc.dump()), ErrorKind::ArchitectureMismatch);

  auto bad_hex = save_model(nn::init_dnn(init));
  bad_hex["layers"][0]["weights_hex"][0] = "zz";
  EXPECT_EQ(load_kind(bad_hex.dump()), ErrorKind::SchemaMismatch);
}

TEST(ModelIo, UnknownVersionRejected) {
  auto doc = save_model(nn::DnnModel::zeros());
  doc["version"] = "v999";
  EXPECT_EQ(load_kind(doc.dump()), ErrorKind::VersionUnsupported);
}
