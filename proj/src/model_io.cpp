#include "scamguard/model_io.hpp"

#include "scamguard/hexfloat.hpp"

namespace scamguard {

namespace {

using baselines::Classifier;
using baselines::Kind;

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorKind::SchemaMismatch, msg); }

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema(std::string("missing '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return member(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    schema(std::string("wrong type for '") + key + "'");
  }
}

template <typename Derived>
Json hex_array(const Eigen::DenseBase<Derived>& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(encode_hex_double(m(r, c)));
  return a;
}

Eigen::MatrixXd matrix_from_hex(const Json& a, Eigen::Index rows, Eigen::Index cols) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(rows * cols)) schema("parameter array has the wrong length");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = a[k++];
      if (!v.is_string()) schema("parameters must be hex strings");
      m(r, c) = decode_hex_double(v.get_ref<const std::string&>());
    }
  return m;
}

Json header(std::string_view kind, const std::string& model_version) {
  return {{"version", kModelDocumentVersion}, {"kind", kind}, {"model_version", model_version}};
}

void check_header(const Json& doc, std::string_view kind) {
  if (!doc.is_object()) schema("model document must be an object");
  auto version = get<std::string>(doc, "version");
  if (version != kModelDocumentVersion) throw Error(ErrorKind::VersionUnsupported, "document version " + version);
  if (get<std::string>(doc, "kind") != kind) schema("expected kind '" + std::string(kind) + "'");
}

Json dense_entry(const nn::Dense& l) {
  return {{"type", "dense"},
          {"shape", {l.out_size(), l.in_size()}},
          {"activation", nn::to_string(l.activation)},
          {"weights_hex", hex_array(l.weights)},
          {"biases_hex", hex_array(l.biases)}};
}

nn::Dense dense_from(const Json& e) {
  if (get<std::string>(e, "type") != "dense") schema("expected a dense layer");
  auto shape = get<std::vector<Eigen::Index>>(e, "shape");
  if (shape.size() != 2 || shape[0] <= 0 || shape[1] <= 0) schema("dense shape must be [out, in]");
  nn::Dense l;
  l.activation = nn::activation_from_string(get<std::string>(e, "activation"));
  l.weights = matrix_from_hex(member(e, "weights_hex"), shape[0], shape[1]);
  l.biases = matrix_from_hex(member(e, "biases_hex"), shape[0], 1);
  return l;
}

Json conv_entry(const nn::Conv2d<double>& c) {
  return {{"type", "conv"},
          {"shape", {c.out_channels(), c.in_channels(), 3, 3}},
          {"activation", "relu"},
          {"weights_hex", hex_array(c.weights)},
          {"biases_hex", hex_array(c.biases)}};
}

nn::Conv2d<double> conv_from(const Json& e) {
  if (get<std::string>(e, "type") != "conv") schema("expected a conv layer");
  auto shape = get<std::vector<Eigen::Index>>(e, "shape");
  if (shape.size() != 4 || shape[2] != 3 || shape[3] != 3 || shape[0] <= 0 || shape[1] <= 0)
    schema("conv shape must be [out, in, 3, 3]");
  nn::Conv2d<double> c;
  c.weights = matrix_from_hex(member(e, "weights_hex"), shape[0], shape[1] * 9);
  c.biases = matrix_from_hex(member(e, "biases_hex"), shape[0], 1);
  return c;
}

Json tree_entry(const baselines::Tree& t) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold_hex", encode_hex_double(n.threshold)},
                     {"left", n.left},
                     {"right", n.right},
                     {"leaf_class", n.leaf_class},
                     {"class_fraction_hex", encode_hex_double(n.class_fraction)},
                     {"depth", n.depth}});
  return {{"type", "tree"}, {"nodes", nodes}};
}

baselines::Tree tree_from(const Json& e) {
  if (get<std::string>(e, "type") != "tree") schema("expected a tree");
  baselines::Tree t;
  const auto& nodes = member(e, "nodes");
  if (!nodes.is_array()) schema("tree nodes must be an array");
  for (const auto& n : nodes) {
    baselines::TreeNode node;
    node.feature = get<int>(n, "feature");
    node.threshold = decode_hex_double(get<std::string>(n, "threshold_hex"));
    node.left = get<int>(n, "left");
    node.right = get<int>(n, "right");
    node.leaf_class = get<int>(n, "leaf_class");
    node.class_fraction = decode_hex_double(get<std::string>(n, "class_fraction_hex"));
    node.depth = get<int>(n, "depth");
    t.nodes.push_back(node);
  }
  return t;
}

}  // namespace

Json save_model(const nn::DnnModel& m) {
  Json doc = header("dnn", m.version());
  doc["threshold"] = m.threshold();
  Json layers = Json::array();
  for (const auto& l : m.layers()) layers.push_back(dense_entry(l));
  doc["layers"] = layers;
  return doc;
}

Json save_model(const nn::CnnModel& m) {
  Json doc = header("cnn", m.version());
  doc["threshold"] = 0.5;
  doc["layers"] = {conv_entry(m.conv1()), {{"type", "maxpool"}, {"shape", {2, 2}}},
                   conv_entry(m.conv2()), {{"type", "maxpool"}, {"shape", {2, 2}}},
                   dense_entry(m.dense1()), dense_entry(m.dense2())};
  return doc;
}

Json save_model(const Classifier& c) {
  Json doc = header(baselines::to_string(c.kind()), "");
  doc["threshold"] = 0.5;
  doc["dim"] = c.dim();
  doc["train_seed"] = c.train_seed();
  Json layers = Json::array();
  if (const auto* lp = std::get_if<baselines::LinearParams>(&c.params())) {
    layers.push_back({{"type", "linear"},
                      {"shape", {1, lp->weights.size()}},
                      {"activation", "sigmoid"},
                      {"weights_hex", hex_array(lp->weights)},
                      {"biases_hex", {encode_hex_double(lp->bias)}}});
  } else if (const auto* t = std::get_if<baselines::Tree>(&c.params())) {
    layers.push_back(tree_entry(*t));
  } else {
    for (const auto& t : std::get<baselines::ForestParams>(c.params()).trees) layers.push_back(tree_entry(t));
  }
  doc["layers"] = layers;
  return doc;
}

Json save_model(const baselines::OneVsRest& c) {
  Json doc = header("ovr", "");
  doc["threshold"] = 0.5;
  Json members = Json::array();
  for (const auto& m : c.members()) members.push_back(save_model(m));
  doc["members"] = members;
  doc["layers"] = Json::array();
  return doc;
}

Json save_model(const AnyModel& m) {
  return std::visit([](const auto& v) { return save_model(v); }, m);
}

nn::DnnModel load_dnn(const Json& doc) {
  check_header(doc, "dnn");
  const auto& layers = member(doc, "layers");
  if (!layers.is_array()) schema("layers must be an array");
  std::vector<nn::Dense> dense;
  for (const auto& e : layers) dense.push_back(dense_from(e));
  return nn::DnnModel(std::move(dense), get<double>(doc, "threshold"), get<std::string>(doc, "model_version"));
}

nn::CnnModel load_cnn(const Json& doc) {
  check_header(doc, "cnn");
  const auto& layers = member(doc, "layers");
  if (!layers.is_array() || layers.size() != 6) schema("cnn document needs 6 layer entries");
  for (std::size_t i : {1u, 3u})
    if (get<std::string>(layers[i], "type") != "maxpool") schema("expected maxpool entry");
  return nn::CnnModel(conv_from(layers[0]), conv_from(layers[2]), dense_from(layers[4]), dense_from(layers[5]),
                      get<std::string>(doc, "model_version"));
}

Classifier load_classifier(const Json& doc) {
  if (!doc.is_object()) schema("model document must be an object");
  const auto kind = baselines::kind_from_string(get<std::string>(doc, "kind"));
  check_header(doc, baselines::to_string(kind));
  const auto dim = get<Eigen::Index>(doc, "dim");
  const auto seed = get<std::uint64_t>(doc, "train_seed");
  const auto& layers = member(doc, "layers");
  if (!layers.is_array() || layers.empty()) schema("classifier needs layers");
  switch (kind) {
    case Kind::LogReg:
    case Kind::LinearSvm: {
      const auto& e = layers[0];
      if (get<std::string>(e, "type") != "linear") schema("expected a linear layer");
      baselines::LinearParams p{matrix_from_hex(member(e, "weights_hex"), dim, 1),
                                matrix_from_hex(member(e, "biases_hex"), 1, 1)(0, 0)};
      return Classifier(kind, std::move(p), dim, seed);
    }
    case Kind::DecisionTree: return Classifier(kind, tree_from(layers[0]), dim, seed);
    case Kind::RandomForest: {
      baselines::ForestParams f;
      for (const auto& e : layers) f.trees.push_back(tree_from(e));
      return Classifier(kind, std::move(f), dim, seed);
    }
  }
  schema("unreachable");
}

baselines::OneVsRest load_one_vs_rest(const Json& doc) {
  check_header(doc, "ovr");
  const auto& members = member(doc, "members");
  if (!members.is_array()) schema("members must be an array");
  std::vector<Classifier> out;
  for (const auto& m : members) out.push_back(load_classifier(m));
  return baselines::OneVsRest(std::move(out));
}

AnyModel load_model(const Json& doc) {
  if (!doc.is_object()) schema("model document must be an object");
  auto version = get<std::string>(doc, "version");
  if (version != kModelDocumentVersion) throw Error(ErrorKind::VersionUnsupported, "document version " + version);
  auto kind = get<std::string>(doc, "kind");
  if (kind == "dnn") return load_dnn(doc);
  if (kind == "cnn") return load_cnn(doc);
  if (kind == "ovr") return load_one_vs_rest(doc);
  return load_classifier(doc);
}

AnyModel load_model_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    schema(std::string("unparseable model document: ") + e.what());
  }
  return load_model(doc);
}

}  // namespace scamguard
