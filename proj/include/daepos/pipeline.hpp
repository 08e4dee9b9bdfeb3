#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "daepos/evaluation.hpp"
#include "daepos/signature.hpp"

namespace daepos {

struct ModelEntry {
  ModelSpec spec;
  Variant variant = Variant::plain;

  std::string label() const { return model_label(spec, variant); }
};

// The eight model configurations of the reference experiment: LR, RF
// (100 / 300 trees), kNN (k = 4) and NN ([128,128,128] / [256,512,256]), each
// without and with the estimated position appended.
std::vector<ModelEntry> reference_lineup();

struct PipelineConfig {
  std::filesystem::path input;                     // surveyed signatures (radio map source)
  std::optional<std::filesystem::path> user_input; // external signatures for the transfer experiment
  InputFormat format = InputFormat::canonical;
  std::size_t ap_count = kDefaultApCount;
  double fill = kDefaultFillDbm;
  std::size_t k = kDefaultK;
  std::size_t n_folds = kDefaultFolds;
  Grouping grouping = Grouping::by_signature;
  NeighborWeighting weighting = NeighborWeighting::uniform;
  std::vector<ModelEntry> models = reference_lineup();
  std::vector<std::string> transfer_models{"RF-xy"};  // labels refit on all data and scored on user_input
  bool raw_predictions = false;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  void validate() const;  // throws ConfigError
  LocalizationOptions localization() const { return {k, fill, weighting}; }
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON serialization (output_dir excluded), as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

// "daepos config_hash=<hash> seed=<seed>"
std::string provenance_comment(const PipelineConfig& config);

struct PipelineResult {
  ApRegistry registry;
  std::size_t signature_count = 0;
  std::size_t point_count = 0;
  std::size_t distinct_aps = 0;
  std::vector<std::pair<Variant, double>> mean_labels;  // mean true error per built variant
  std::vector<EvaluationReport> reports;                // cross_fit, one per model entry
  std::vector<EvaluationReport> transfer_reports;       // holdout on user_input
  std::optional<double> user_mean_error;                // mean positioning error of user_input
};

/// ingest -> registry -> DAE datasets -> cross-fit evaluation of every model ->
/// optional transfer evaluation. Writes registry.csv, dae_dataset_<variant>.csv,
/// report.csv, correlation.csv and pairs_/ecdf_<label>.csv under output_dir.
/// Stage failures are rethrown with the stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& config);

// Feature-building metadata stored next to a fitted model so that `predict` can
// rebuild the exact feature layout.
struct FeatureLayout {
  ApRegistry registry;
  double fill = kDefaultFillDbm;
  std::size_t k = kDefaultK;
  Variant variant = Variant::plain;
  NeighborWeighting weighting = NeighborWeighting::uniform;
};

struct ModelBundle {
  ErrorRegressor model;
  std::optional<FeatureLayout> layout;
};

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

struct ScanEstimate {
  std::string point_id;
  Position2D position;
  Prediction error;
};

/// Localizes every scan against `map_signatures` and estimates its positioning
/// error. Without a stored layout the registry is rebuilt from the map with
/// `fallback`'s parameters. Throws ContractError when the resulting feature
/// width differs from the model's.
std::vector<ScanEstimate> predict_scans(const ModelBundle& bundle, std::span<const RadioSignature> map_signatures,
                                        std::span<const RadioSignature> scans, const PipelineConfig& fallback,
                                        Variant fallback_variant = Variant::plain);

void write_registry(std::ostream& out, const ApRegistry& registry, const std::string& comment = {});

}  // namespace daepos
