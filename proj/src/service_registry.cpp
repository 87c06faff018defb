#include "scamguard/service/registry.hpp"

#include <algorithm>

#include "scamguard/model_io.hpp"
#include "scamguard/sim/dataset_io.hpp"

namespace scamguard::service {

namespace fs = std::filesystem;

std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::Calls ? "calls" : "ads"; }

ModelKind model_kind_from_string(std::string_view s) {
  if (s == "calls") return ModelKind::Calls;
  if (s == "ads") return ModelKind::Ads;
  throw Error(ErrorKind::InvalidValue, "model kind must be 'calls' or 'ads'");
}

bool is_valid_version(std::string_view v) noexcept {
  if (v.empty() || v.size() > 64 || v.front() == '.') return false;
  return std::all_of(v.begin(), v.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '_' || c == '-';
  });
}

namespace {

std::string version_of(const Json& doc) {
  if (!doc.is_object() || !doc.contains("model_version") || !doc.at("model_version").is_string())
    throw Error(ErrorKind::SchemaMismatch, "model document lacks a model_version string");
  auto v = doc.at("model_version").get<std::string>();
  if (!is_valid_version(v)) throw Error(ErrorKind::SchemaMismatch, "model_version '" + v + "' is not a valid version name");
  return v;
}

std::shared_ptr<const CallsModel> load_calls(const Json& doc) {
  auto dnn = load_dnn(doc);
  if (!doc.contains("scaling")) throw Error(ErrorKind::SchemaMismatch, "calls document lacks 'scaling'");
  return std::make_shared<const CallsModel>(CallsModel{std::move(dnn), scaling_spec_from_json(doc.at("scaling"))});
}

std::shared_ptr<const AdsModel> load_ads(const Json& doc) {
  return std::make_shared<const AdsModel>(AdsModel{load_cnn(doc)});
}

}  // namespace

ModelRegistry::ModelRegistry(fs::path store_dir) : dir_(std::move(store_dir)) {
  fs::create_directories(dir_ / "calls");
  fs::create_directories(dir_ / "ads");
}

Json ModelRegistry::calls_document(const nn::DnnModel& dnn, const ScalingSpec& scaling) {
  Json doc = save_model(dnn);
  doc["scaling"] = to_json(scaling);
  return doc;
}

Json ModelRegistry::ads_document(const nn::CnnModel& cnn) { return save_model(cnn); }

fs::path ModelRegistry::path_for(ModelKind kind, std::string_view version) const {
  return dir_ / std::string(to_string(kind)) / (std::string(version) + ".json");
}

std::string ModelRegistry::publish(ModelKind kind, const Json& doc) {
  const auto version = version_of(doc);
  if (kind == ModelKind::Calls)
    load_calls(doc);
  else
    load_ads(doc);
  sim::write_text(path_for(kind, version), doc.dump(1));
  return version;
}

std::vector<std::string> ModelRegistry::versions(ModelKind kind) const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir_ / std::string(to_string(kind))))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

bool ModelRegistry::has_version(ModelKind kind, std::string_view version) const {
  return is_valid_version(version) && fs::is_regular_file(path_for(kind, version));
}

void ModelRegistry::activate(ModelKind kind, const std::string& version) {
  if (!has_version(kind, version))
    throw Error(ErrorKind::NotFound, "no " + std::string(to_string(kind)) + " model version '" + version + "'");
  std::shared_ptr<const CallsModel> calls;
  std::shared_ptr<const AdsModel> ads;
  try {
    const auto doc = Json::parse(sim::read_text(path_for(kind, version)));
    if (version_of(doc) != version) throw Error(ErrorKind::SchemaMismatch, "model_version does not match file name");
    if (kind == ModelKind::Calls)
      calls = load_calls(doc);
    else
      ads = load_ads(doc);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("model document: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(ErrorKind::SchemaMismatch, std::string("model document: ") + e.what());
  }
  std::lock_guard lock(mu_);
  if (calls) calls_ = std::move(calls);
  if (ads) ads_ = std::move(ads);
}

std::shared_ptr<const CallsModel> ModelRegistry::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::shared_ptr<const AdsModel> ModelRegistry::ads() const {
  std::lock_guard lock(mu_);
  return ads_;
}

ActiveVersions ModelRegistry::active() const {
  std::lock_guard lock(mu_);
  ActiveVersions v;
  if (calls_) v.calls = calls_->dnn.version();
  if (ads_) v.ads = ads_->cnn.version();
  return v;
}

}  // namespace scamguard::service
