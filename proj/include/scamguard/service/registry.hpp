#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scamguard/features.hpp"
#include "scamguard/nn/models.hpp"

namespace scamguard::service {

enum class ModelKind { Calls, Ads };
std::string_view to_string(ModelKind k) noexcept;
ModelKind model_kind_from_string(std::string_view s);  // "calls" | "ads"; InvalidValue otherwise

/// Immutable snapshots handed to request handlers.
struct CallsModel {
  nn::DnnModel dnn;
  ScalingSpec scaling;
};

struct AdsModel {
  nn::CnnModel cnn;
};

struct ActiveVersions {
  std::optional<std::string> calls, ads;
};

/// Versioned model documents under <store>/<kind>/<version>.json plus the
/// active version per kind. Activation replaces a shared_ptr under a mutex, so
/// a handler sees either the old or the new snapshot in full.
class ModelRegistry {
 public:
  explicit ModelRegistry(std::filesystem::path store_dir);

  /// Calls documents are the DNN document plus a "scaling" member.
  static Json calls_document(const nn::DnnModel& dnn, const ScalingSpec& scaling);
  static Json ads_document(const nn::CnnModel& cnn);

  /// Validates by loading, then writes <store>/<kind>/<model_version>.json.
  /// Returns the version.
  std::string publish(ModelKind kind, const Json& doc);

  std::vector<std::string> versions(ModelKind kind) const;
  bool has_version(ModelKind kind, std::string_view version) const;

  /// NotFound for an unknown version; SchemaMismatch when the stored document
  /// fails to load. The active model is untouched on failure.
  void activate(ModelKind kind, const std::string& version);

  std::shared_ptr<const CallsModel> calls() const;
  std::shared_ptr<const AdsModel> ads() const;
  ActiveVersions active() const;

  const std::filesystem::path& store_dir() const noexcept { return dir_; }

 private:
  std::filesystem::path path_for(ModelKind kind, std::string_view version) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::shared_ptr<const CallsModel> calls_;
  std::shared_ptr<const AdsModel> ads_;
};

/// Version strings double as file names: [A-Za-z0-9._-]{1,64}, not starting with '.'.
bool is_valid_version(std::string_view v) noexcept;

}  // namespace scamguard::service
