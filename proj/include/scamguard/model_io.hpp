#pragma once

// Versioned JSON model documents. Every real number is stored as the hex
// encoding of its IEEE-754 bit pattern so that load(save(m)) predicts
// bit-identically to m.
//
//   {"version": "v1", "kind": "dnn"|"cnn"|"logreg"|"tree"|"forest"|"svm"|"ovr",
//    "model_version": "...", "threshold": 0.5,
//    "layers": [{"type", "shape", "activation", "weights_hex", "biases_hex"}, ...]}
//
// Trees use {"type": "tree", "nodes": [...]} entries; one-vs-rest documents
// hold their per-class classifiers under "members".

#include <string_view>
#include <variant>

#include "scamguard/baselines.hpp"
#include "scamguard/nn/models.hpp"

namespace scamguard {

inline constexpr std::string_view kModelDocumentVersion = "v1";

using AnyModel = std::variant<nn::DnnModel, nn::CnnModel, baselines::Classifier, baselines::OneVsRest>;

Json save_model(const nn::DnnModel& m);
Json save_model(const nn::CnnModel& m);
Json save_model(const baselines::Classifier& c);
Json save_model(const baselines::OneVsRest& c);
Json save_model(const AnyModel& m);

/// Throws SchemaMismatch for malformed documents, VersionUnsupported for an
/// unknown "version".
AnyModel load_model(const Json& doc);
AnyModel load_model_text(std::string_view text);

nn::DnnModel load_dnn(const Json& doc);
nn::CnnModel load_cnn(const Json& doc);
baselines::Classifier load_classifier(const Json& doc);
baselines::OneVsRest load_one_vs_rest(const Json& doc);

}  // namespace scamguard
