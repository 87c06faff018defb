#include "scamguard/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "scamguard/rng.hpp"

namespace scamguard::baselines {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void require_two_classes(const Dataset& d) {
  bool has0 = false, has1 = false;
  for (int y : d.y) {
    has0 |= y == 0;
    has1 |= y == 1;
  }
  if (!has0 || !has1) throw Error(ErrorKind::DegenerateDataset, "binary trainer needs both classes");
}

void require_binary(const Dataset& d) {
  for (int y : d.y)
    if (y != 0 && y != 1) throw Error(ErrorKind::InvalidValue, "binary trainer needs labels in {0,1}");
}

constexpr double kSplitTolerance = 1e-12;

}  // namespace

void Dataset::validate() const {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::DimensionMismatch, "rows != labels");
  if (y.empty()) throw Error(ErrorKind::EmptyCorpus, "empty dataset");
  if (!x.allFinite()) throw Error(ErrorKind::InvalidValue, "non-finite feature");
}

std::string_view to_string(Kind k) noexcept {
  switch (k) {
    case Kind::LogReg: return "logreg";
    case Kind::DecisionTree: return "tree";
    case Kind::RandomForest: return "forest";
    case Kind::LinearSvm: return "svm";
  }
  return "?";
}

Kind kind_from_string(std::string_view s) {
  if (s == "logreg") return Kind::LogReg;
  if (s == "tree") return Kind::DecisionTree;
  if (s == "forest") return Kind::RandomForest;
  if (s == "svm") return Kind::LinearSvm;
  throw Error(ErrorKind::SchemaMismatch, "unknown classifier kind '" + std::string(s) + "'");
}

const TreeNode& Tree::leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const TreeNode* n = &nodes.at(0);
  while (!n->is_leaf()) n = &nodes[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
  return *n;
}

int Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

Classifier::Classifier(Kind kind, Params params, Eigen::Index dim, std::uint64_t train_seed)
    : kind_(kind), params_(std::move(params)), dim_(dim), seed_(train_seed) {
  const bool linear = kind == Kind::LogReg || kind == Kind::LinearSvm;
  if (linear != std::holds_alternative<LinearParams>(params_) ||
      (kind == Kind::DecisionTree) != std::holds_alternative<Tree>(params_) ||
      (kind == Kind::RandomForest) != std::holds_alternative<ForestParams>(params_))
    throw Error(ErrorKind::SchemaMismatch, "classifier parameters do not match its kind");
  auto check_tree = [&](const Tree& t) {
    if (t.nodes.empty()) throw Error(ErrorKind::SchemaMismatch, "empty tree");
    const auto n = static_cast<int>(t.nodes.size());
    for (const auto& node : t.nodes) {
      if (node.is_leaf()) continue;
      if (node.feature >= dim_ || !std::isfinite(node.threshold) || node.left <= 0 || node.left >= n ||
          node.right <= 0 || node.right >= n)
        throw Error(ErrorKind::SchemaMismatch, "malformed tree node");
    }
  };
  if (const auto* lp = std::get_if<LinearParams>(&params_)) {
    if (lp->weights.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "weight vector size");
  } else if (const auto* t = std::get_if<Tree>(&params_)) {
    check_tree(*t);
  } else {
    const auto& f = std::get<ForestParams>(params_);
    if (f.trees.empty()) throw Error(ErrorKind::SchemaMismatch, "forest without trees");
    for (const auto& t : f.trees) check_tree(t);
  }
}

Prediction predict(const Classifier& c, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != c.dim()) throw Error(ErrorKind::DimensionMismatch, "feature dimension differs from training");
  switch (c.kind()) {
    case Kind::LogReg:
    case Kind::LinearSvm: {
      const auto& p = std::get<LinearParams>(c.params());
      double s = sigmoid(p.weights.dot(x) + p.bias);
      return {s >= 0.5 ? 1 : 0, s};
    }
    case Kind::DecisionTree: {
      const auto& leaf = std::get<Tree>(c.params()).leaf_for(x);
      return {leaf.leaf_class, leaf.class_fraction};
    }
    case Kind::RandomForest: {
      const auto& trees = std::get<ForestParams>(c.params()).trees;
      std::size_t votes = 0;
      for (const auto& t : trees) votes += t.leaf_for(x).leaf_class == 1 ? 1 : 0;
      double s = static_cast<double>(votes) / static_cast<double>(trees.size());
      return {2 * votes > trees.size() ? 1 : 0, s};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Logistic regression

Classifier train_logreg(const Dataset& data, const LogRegOptions& opt) {
  data.validate();
  require_binary(data);
  require_two_classes(data);
  const auto n = static_cast<double>(data.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) y[static_cast<Eigen::Index>(i)] = data.y[i];

  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.dim());
  double b = 0.0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Eigen::VectorXd margin = (data.x * w).array() + b;
    Eigen::VectorXd residual = margin.unaryExpr([](double z) { return sigmoid(z); }) - y;
    Eigen::VectorXd grad_w = data.x.transpose() * residual / n + opt.l2 * w;
    double grad_b = residual.sum() / n;
    w -= opt.learning_rate * grad_w;
    b -= opt.learning_rate * grad_b;
  }
  return Classifier(Kind::LogReg, LinearParams{std::move(w), b}, data.dim(), opt.seed);
}

// ---------------------------------------------------------------------------
// Linear SVM (stochastic subgradient on the hinge loss, bias as an extra input)

Classifier train_svm(const Dataset& data, const SvmOptions& opt) {
  data.validate();
  require_binary(data);
  require_two_classes(data);
  if (!(opt.lambda > 0.0) || opt.epochs <= 0) throw Error(ErrorKind::InvalidValue, "svm needs lambda > 0, epochs > 0");
  const Eigen::Index d = data.dim();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd xi(d + 1);
  Rng rng(opt.seed);
  const double radius = 1.0 / std::sqrt(opt.lambda);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i : permutation(data.size(), rng)) {
      ++t;
      const double eta = 1.0 / (opt.lambda * static_cast<double>(t));
      xi.head(d) = data.x.row(static_cast<Eigen::Index>(i)).transpose();
      xi[d] = 1.0;
      const double yi = data.y[i] == 1 ? 1.0 : -1.0;
      const bool violates = yi * w.dot(xi) < 1.0;
      w *= 1.0 - eta * opt.lambda;
      if (violates) w += eta * yi * xi;
      if (double norm = w.norm(); norm > radius) w *= radius / norm;
    }
  }
  return Classifier(Kind::LinearSvm, LinearParams{w.head(d), w[d]}, d, opt.seed);
}

// ---------------------------------------------------------------------------
// CART

double gini(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::map<int, std::size_t> counts;
  for (int y : labels) ++counts[y];
  double g = 1.0;
  const auto n = static_cast<double>(labels.size());
  for (const auto& [_, c] : counts) g -= (static_cast<double>(c) / n) * (static_cast<double>(c) / n);
  return g;
}

namespace {

double binary_gini(double pos, double n) {
  if (n <= 0.0) return 0.0;
  const double p = pos / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

}  // namespace

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                std::span<const int> candidate_features, int min_leaf) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  double pos_total = 0.0;
  for (auto r : rows) pos_total += data.y[r];
  const double parent = binary_gini(pos_total, static_cast<double>(n));

  std::optional<Split> best;
  double best_dec = 0.0;
  std::vector<std::pair<double, int>> col(n);
  for (int f : candidate_features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {data.x(static_cast<Eigen::Index>(rows[i]), f), data.y[rows[i]]};
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double pos_left = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      pos_left += col[i].second;
      if (col[i].first == col[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
      const double dl = static_cast<double>(nl), dr = static_cast<double>(nr), dn = static_cast<double>(n);
      const double dec =
          parent - dl / dn * binary_gini(pos_left, dl) - dr / dn * binary_gini(pos_total - pos_left, dr);
      if (dec > best_dec + kSplitTolerance) {  // near-equal later candidates lose the tie
        best_dec = dec;
        best = Split{f, 0.5 * (col[i].first + col[i + 1].first), dec};
      }
    }
  }
  return best;
}

namespace {

using FeaturePicker = std::function<std::vector<int>()>;

int grow(Tree& tree, const Dataset& data, std::vector<std::size_t> rows, int depth, const TreeOptions& opt,
         const FeaturePicker& pick) {
  double pos = 0.0;
  for (auto r : rows) pos += data.y[r];
  const double frac = rows.empty() ? 0.0 : pos / static_cast<double>(rows.size());

  const int index = static_cast<int>(tree.nodes.size());
  TreeNode leaf;
  leaf.class_fraction = frac;
  leaf.leaf_class = frac >= 0.5 ? 1 : 0;
  leaf.depth = depth;
  tree.nodes.push_back(leaf);

  const bool pure = pos == 0.0 || pos == static_cast<double>(rows.size());
  if (depth >= opt.max_depth || pure || rows.size() < 2 * static_cast<std::size_t>(opt.min_leaf)) return index;

  auto features = pick();
  auto split = best_split(data, rows, features, opt.min_leaf);
  if (!split) return index;

  std::vector<std::size_t> left, right;
  for (auto r : rows) (data.x(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();

  const int l = grow(tree, data, std::move(left), depth + 1, opt, pick);
  const int r = grow(tree, data, std::move(right), depth + 1, opt, pick);
  auto& node = tree.nodes[static_cast<std::size_t>(index)];
  node.feature = split->feature;
  node.threshold = split->threshold;
  node.left = l;
  node.right = r;
  return index;
}

Tree build_tree(const Dataset& data, std::vector<std::size_t> rows, const TreeOptions& opt, const FeaturePicker& pick) {
  if (opt.max_depth < 0 || opt.min_leaf < 1) throw Error(ErrorKind::InvalidValue, "bad tree options");
  Tree t;
  grow(t, data, std::move(rows), 0, opt, pick);
  return t;
}

}  // namespace

Classifier train_tree(const Dataset& data, const TreeOptions& opt) {
  data.validate();
  require_binary(data);
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<int> all(static_cast<std::size_t>(data.dim()));
  std::iota(all.begin(), all.end(), 0);
  auto tree = build_tree(data, std::move(rows), opt, [&] { return all; });
  return Classifier(Kind::DecisionTree, std::move(tree), data.dim(), 0);
}

Classifier train_forest(const Dataset& data, const ForestOptions& opt) {
  data.validate();
  require_binary(data);
  if (opt.n_trees < 1) throw Error(ErrorKind::InvalidValue, "forest needs at least one tree");
  const int d = static_cast<int>(data.dim());
  const int k = std::clamp(opt.features_per_split.value_or(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))))), 1, d);
  const TreeOptions topt{opt.max_depth, opt.min_leaf};

  ForestParams forest;
  for (int t = 0; t < opt.n_trees; ++t) {
    Rng rng(opt.seed + static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(data.size());
    if (opt.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, data.size());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    std::vector<int> pool(static_cast<std::size_t>(d));
    auto pick = [&] {
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < k; ++i) std::swap(pool[static_cast<std::size_t>(i)], pool[i + uniform_index(rng, static_cast<std::size_t>(d - i))]);
      std::vector<int> chosen(pool.begin(), pool.begin() + k);
      std::sort(chosen.begin(), chosen.end());
      return chosen;
    };
    forest.trees.push_back(build_tree(data, std::move(rows), topt, pick));
  }
  return Classifier(Kind::RandomForest, std::move(forest), data.dim(), opt.seed);
}

// ---------------------------------------------------------------------------
// One-vs-rest

OneVsRest::OneVsRest(std::vector<Classifier> per_class) : members_(std::move(per_class)) {
  if (members_.size() < 2) throw Error(ErrorKind::InvalidValue, "one-vs-rest needs at least two classes");
  for (const auto& m : members_)
    if (m.dim() != members_.front().dim()) throw Error(ErrorKind::DimensionMismatch, "members disagree on dimension");
}

Eigen::VectorXd OneVsRest::scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd s(static_cast<Eigen::Index>(members_.size()));
  for (std::size_t k = 0; k < members_.size(); ++k) s[static_cast<Eigen::Index>(k)] = baselines::predict(members_[k], x).score;
  return s;
}

int OneVsRest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  auto s = scores(x);
  int best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = static_cast<int>(k);
  return best;
}

}  // namespace scamguard::baselines
