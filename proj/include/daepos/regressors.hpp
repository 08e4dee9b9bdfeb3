#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "daepos/dae_dataset.hpp"
#include "daepos/models/forest.hpp"
#include "daepos/models/knn.hpp"
#include "daepos/models/linear.hpp"
#include "daepos/models/network.hpp"

namespace daepos {

enum class ModelFamily { linear, knn, forest, network };

std::string to_string(ModelFamily f);
ModelFamily parse_model_family(const std::string& text);

struct ModelSpec {
  ModelFamily family = ModelFamily::forest;
  std::size_t k = kDefaultK;                       // knn
  std::size_t trees = 100;                         // forest
  std::size_t max_depth = 0;                       // forest, 0 = unlimited
  std::size_t min_samples_split = 2;               // forest
  std::size_t max_features = 0;                    // forest, 0 = all
  bool bootstrap = true;                           // forest
  std::vector<std::size_t> layers{128, 128, 128};  // network
  double learning_rate = 1e-3;                     // network
  std::size_t epochs = 200;                        // network
  std::size_t batch_size = 32;                     // network
  std::uint64_t seed = 0;

  // Throws ConfigError when a family-specific field is out of range.
  void validate() const;

  // Short table label and parameter column, e.g. "RF" / "trees=100".
  std::string short_name() const;
  std::string parameters() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

struct Prediction {
  double estimate = 0;  // clamped at zero
  double raw = 0;       // model output before clamping
};

/// A fitted positioning-error model with a uniform predict contract.
class ErrorRegressor {
 public:
  using Model = std::variant<LinearModel, KnnRegressor, RandomForest, NetworkRegressor>;

  ErrorRegressor(ModelSpec spec, std::size_t input_width, Model model);

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& features) const;
  std::vector<Prediction> predict_batch(const FeatureMatrix& features) const;

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t input_width() const noexcept { return input_width_; }
  const Model& model() const noexcept { return model_; }
  // Set when the linear fit fell back to the minimum-norm solution.
  bool rank_deficient() const noexcept;

 private:
  void check_width(std::size_t width) const;

  ModelSpec spec_;
  std::size_t input_width_;
  Model model_;
};

ErrorRegressor fit(const ModelSpec& spec, const FeatureMatrix& x, const Eigen::VectorXd& y);
ErrorRegressor fit(const ModelSpec& spec, const DaeDataset& dataset);

/// Versioned JSON document. Doubles are written in shortest round-trip form, so
/// a loaded model reproduces predictions bit for bit.
nlohmann::json to_json(const ErrorRegressor& model);
ErrorRegressor regressor_from_json(const nlohmann::json& j);

void save_regressor(std::ostream& out, const ErrorRegressor& model);
ErrorRegressor load_regressor(std::istream& in);

}  // namespace daepos
