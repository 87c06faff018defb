#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "scamguard/error.hpp"

namespace scamguard::baselines {

/// Rows of `x` are samples; labels are 0/1 (binary trainers) or class codes.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
  void validate() const;
};

enum class Kind { LogReg, DecisionTree, RandomForest, LinearSvm };
std::string_view to_string(Kind k) noexcept;
Kind kind_from_string(std::string_view s);

struct Prediction {
  int cls = 0;
  double score = 0.0;
};

struct LinearParams {
  Eigen::VectorXd weights;
  double bias = 0.0;
  friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

/// Flat node array; node 0 is the root. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  int leaf_class = 0;
  double class_fraction = 0.0;  // fraction of class 1 among training samples at the leaf
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct ForestParams {
  std::vector<Tree> trees;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

class Classifier {
 public:
  using Params = std::variant<LinearParams, Tree, ForestParams>;

  Classifier(Kind kind, Params params, Eigen::Index dim, std::uint64_t train_seed);

  Kind kind() const noexcept { return kind_; }
  const Params& params() const noexcept { return params_; }
  Eigen::Index dim() const noexcept { return dim_; }
  std::uint64_t train_seed() const noexcept { return seed_; }

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  Kind kind_;
  Params params_;
  Eigen::Index dim_;
  std::uint64_t seed_;
};

/// LogReg/SVM: sigmoid of the margin. Tree: leaf class fraction. Forest: vote
/// fraction. Class is score >= 0.5 except forests, where a tied vote is class 0.
Prediction predict(const Classifier& c, const Eigen::Ref<const Eigen::VectorXd>& x);

struct LogRegOptions {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};
Classifier train_logreg(const Dataset& data, const LogRegOptions& opt = {});

struct TreeOptions {
  int max_depth = 8;
  int min_leaf = 5;
};
Classifier train_tree(const Dataset& data, const TreeOptions& opt = {});

struct ForestOptions {
  int n_trees = 50;
  int max_depth = 8;
  int min_leaf = 5;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::optional<int> features_per_split;  // default ceil(sqrt(d))
};
Classifier train_forest(const Dataset& data, const ForestOptions& opt = {});

struct SvmOptions {
  double lambda = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 0;
};
Classifier train_svm(const Dataset& data, const SvmOptions& opt = {});

double gini(std::span<const int> labels);

/// Best Gini split over all features and midpoint thresholds; ties go to the
/// lowest feature index, then the lowest threshold.
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const int> candidate_features, int min_leaf);

/// One binary classifier per class (class k vs rest); argmax of scores with
/// ties going to the lowest class code.
class OneVsRest {
 public:
  explicit OneVsRest(std::vector<Classifier> per_class);

  const std::vector<Classifier>& members() const noexcept { return members_; }
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  friend bool operator==(const OneVsRest&, const OneVsRest&) = default;

 private:
  std::vector<Classifier> members_;
};

template <typename Trainer>
OneVsRest train_one_vs_rest(const Dataset& data, int n_classes, Trainer&& trainer) {
  std::vector<Classifier> members;
  for (int k = 0; k < n_classes; ++k) {
    Dataset bin{data.x, {}};
    bin.y.reserve(data.y.size());
    for (int y : data.y) bin.y.push_back(y == k ? 1 : 0);
    members.push_back(trainer(bin));
  }
  return OneVsRest(std::move(members));
}

}  // namespace scamguard::baselines
