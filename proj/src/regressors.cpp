#include "daepos/regressors.hpp"

#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "daepos/error.hpp"

namespace daepos {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "daepos-model";
constexpr int kModelVersion = 1;

template <typename Derived>
json vector_json(const Eigen::DenseBase<Derived>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

struct ModelToJson {
  json operator()(const LinearModel& m) const {
    return {{"coefficients", vector_json(m.coefficients())},
            {"intercept", m.intercept()},
            {"rank_deficient", m.rank_deficient()}};
  }
  json operator()(const KnnRegressor& m) const {
    const auto& x = m.samples();
    return {{"k", m.k()},
            {"rows", x.rows()},
            {"cols", x.cols()},
            {"samples", vector_json(x.reshaped<Eigen::RowMajor>())},
            {"targets", vector_json(m.targets())}};
  }
  json operator()(const RandomForest& m) const {
    json trees = json::array();
    for (const auto& t : m.trees()) {
      json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
           value = json::array();
      for (const auto& n : t.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
      }
      trees.push_back(
          {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
    }
    return {{"trees", trees}};
  }
  json operator()(const NetworkRegressor& m) const {
    const auto& net = m.network();
    json rm = json::array(), rv = json::array();
    for (const auto& v : net.running_mean()) rm.push_back(vector_json(v));
    for (const auto& v : net.running_var()) rv.push_back(vector_json(v));
    return {{"input_width", net.input_width()},
            {"layers", net.layers()},
            {"parameters", vector_json(net.parameters())},
            {"running_mean", rm},
            {"running_var", rv},
            {"input_mean", vector_json(m.input_mean())},
            {"input_scale", vector_json(m.input_scale())}};
  }
};

ErrorRegressor::Model model_from_json(ModelFamily family, const json& j) {
  switch (family) {
    case ModelFamily::linear:
      return LinearModel(vector_from(j.at("coefficients")), j.at("intercept").get<double>(),
                         j.at("rank_deficient").get<bool>());
    case ModelFamily::knn: {
      const auto rows = j.at("rows").get<Eigen::Index>();
      const auto cols = j.at("cols").get<Eigen::Index>();
      const auto flat = vector_from(j.at("samples"));
      if (flat.size() != rows * cols) throw DataError("model file: knn sample matrix has wrong size");
      FeatureMatrix x = Eigen::Map<const FeatureMatrix>(flat.data(), rows, cols);
      return KnnRegressor(std::move(x), vector_from(j.at("targets")), j.at("k").get<std::size_t>());
    }
    case ModelFamily::forest: {
      std::vector<RegressionTree> trees;
      for (const auto& t : j.at("trees")) {
        std::vector<RegressionTree::Node> nodes(t.at("value").size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          nodes[i].feature = t.at("feature")[i].get<int>();
          nodes[i].threshold = t.at("threshold")[i].get<double>();
          nodes[i].left = t.at("left")[i].get<std::int32_t>();
          nodes[i].right = t.at("right")[i].get<std::int32_t>();
          nodes[i].value = t.at("value")[i].get<double>();
        }
        trees.emplace_back(std::move(nodes));
      }
      return RandomForest(std::move(trees));
    }
    case ModelFamily::network: {
      DenseNetwork net(j.at("input_width").get<std::size_t>(), j.at("layers").get<std::vector<std::size_t>>());
      auto params = vector_from(j.at("parameters"));
      if (params.size() != net.parameters().size()) throw DataError("model file: network parameter count mismatch");
      net.parameters() = std::move(params);
      for (std::size_t l = 0; l < net.layers().size(); ++l) {
        net.running_mean()[l] = vector_from(j.at("running_mean").at(l));
        net.running_var()[l] = vector_from(j.at("running_var").at(l));
      }
      return NetworkRegressor(std::move(net), vector_from(j.at("input_mean")), vector_from(j.at("input_scale")));
    }
  }
  throw DataError("model file: unknown family");
}

}  // namespace

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::linear: return "linear";
    case ModelFamily::knn: return "knn";
    case ModelFamily::forest: return "forest";
    case ModelFamily::network: return "network";
  }
  return "unknown";
}

ModelFamily parse_model_family(const std::string& text) {
  if (text == "linear" || text == "LR") return ModelFamily::linear;
  if (text == "knn" || text == "kNN") return ModelFamily::knn;
  if (text == "forest" || text == "RF") return ModelFamily::forest;
  if (text == "network" || text == "NN") return ModelFamily::network;
  throw ConfigError("unknown model family '" + text + "' (expected linear, knn, forest or network)");
}

void ModelSpec::validate() const {
  switch (family) {
    case ModelFamily::linear: break;
    case ModelFamily::knn:
      if (k < 1) throw ConfigError("knn model: k must be positive");
      break;
    case ModelFamily::forest:
      if (trees < 1) throw ConfigError("forest model: trees must be positive");
      if (min_samples_split < 2) throw ConfigError("forest model: min_samples_split must be at least 2");
      break;
    case ModelFamily::network:
      if (layers.empty()) throw ConfigError("network model: at least one layer is required");
      for (const auto w : layers)
        if (w < 1) throw ConfigError("network model: layer widths must be positive");
      if (!(learning_rate > 0) || epochs < 1 || batch_size < 1)
        throw ConfigError("network model: learning rate, epochs and batch size must be positive");
      break;
  }
}

std::string ModelSpec::short_name() const {
  switch (family) {
    case ModelFamily::linear: return "LR";
    case ModelFamily::knn: return "kNN";
    case ModelFamily::forest: return "RF";
    case ModelFamily::network: return "NN";
  }
  return "?";
}

std::string ModelSpec::parameters() const {
  switch (family) {
    case ModelFamily::linear: return "-";
    case ModelFamily::knn: return fmt::format("k={}", k);
    case ModelFamily::forest: return fmt::format("trees={}", trees);
    case ModelFamily::network: return fmt::format("[{}]", fmt::join(layers, ", "));
  }
  return {};
}

void to_json(json& j, const ModelSpec& s) {
  j = {{"family", to_string(s.family)},
       {"k", s.k},
       {"trees", s.trees},
       {"max_depth", s.max_depth},
       {"min_samples_split", s.min_samples_split},
       {"max_features", s.max_features},
       {"bootstrap", s.bootstrap},
       {"layers", s.layers},
       {"learning_rate", s.learning_rate},
       {"epochs", s.epochs},
       {"batch_size", s.batch_size},
       {"seed", s.seed}};
}

void from_json(const json& j, ModelSpec& s) {
  s = ModelSpec{};
  s.family = parse_model_family(j.at("family").get<std::string>());
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("k", s.k);
  get("trees", s.trees);
  get("max_depth", s.max_depth);
  get("min_samples_split", s.min_samples_split);
  get("max_features", s.max_features);
  get("bootstrap", s.bootstrap);
  get("layers", s.layers);
  get("learning_rate", s.learning_rate);
  get("epochs", s.epochs);
  get("batch_size", s.batch_size);
  get("seed", s.seed);
}

ErrorRegressor::ErrorRegressor(ModelSpec spec, std::size_t input_width, Model model)
    : spec_(std::move(spec)), input_width_(input_width), model_(std::move(model)) {}

bool ErrorRegressor::rank_deficient() const noexcept {
  const auto* lin = std::get_if<LinearModel>(&model_);
  return lin && lin->rank_deficient();
}

void ErrorRegressor::check_width(std::size_t width) const {
  if (width != input_width_)
    throw ContractError(fmt::format("model expects {} features, got {}", input_width_, width));
}

Prediction ErrorRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& features) const {
  check_width(static_cast<std::size_t>(features.size()));
  const double raw = std::visit([&](const auto& m) { return m.predict(features); }, model_);
  return {std::max(raw, 0.0), raw};
}

std::vector<Prediction> ErrorRegressor::predict_batch(const FeatureMatrix& features) const {
  check_width(static_cast<std::size_t>(features.cols()));
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  if (const auto* net = std::get_if<NetworkRegressor>(&model_)) {
    const Eigen::VectorXd raw = net->predict_batch(features);
    for (const double r : raw) out.push_back({std::max(r, 0.0), r});
    return out;
  }
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.push_back(predict(features.row(i).transpose()));
  }
  return out;
}

ErrorRegressor fit(const ModelSpec& spec, const FeatureMatrix& x, const Eigen::VectorXd& y) {
  spec.validate();
  if (x.rows() == 0) throw DataError("cannot fit a model on an empty dataset");
  if (x.rows() != y.size()) throw ContractError("feature and label counts differ");
  const auto width = static_cast<std::size_t>(x.cols());
  switch (spec.family) {
    case ModelFamily::linear: return {spec, width, LinearModel::fit(x, y)};
    case ModelFamily::knn:
      if (static_cast<std::size_t>(x.rows()) < spec.k)
        throw DataError(fmt::format("knn model: {} training rows, fewer than k = {}", x.rows(), spec.k));
      return {spec, width, KnnRegressor(x, y, spec.k)};
    case ModelFamily::forest: {
      ForestParams p;
      p.trees = spec.trees;
      p.bootstrap = spec.bootstrap;
      p.tree = {spec.max_depth, spec.min_samples_split, spec.max_features};
      p.seed = spec.seed;
      return {spec, width, RandomForest::fit(x, y, p)};
    }
    case ModelFamily::network: {
      NetworkParams p{spec.layers, spec.learning_rate, spec.epochs, spec.batch_size, spec.seed};
      return {spec, width, NetworkRegressor::fit(x, y, p)};
    }
  }
  throw ConfigError("unknown model family");
}

ErrorRegressor fit(const ModelSpec& spec, const DaeDataset& dataset) {
  if (dataset.records.empty()) throw DataError("cannot fit a model on an empty DAE dataset");
  for (const auto& r : dataset.records)
    if (static_cast<std::size_t>(r.features.size()) != dataset.width())
      throw DataError("DAE dataset has inconsistent feature widths");
  return fit(spec, dataset.features(), dataset.labels());
}

json to_json(const ErrorRegressor& model) {
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"spec", model.spec()},
          {"input_width", model.input_width()},
          {"model", std::visit(ModelToJson{}, model.model())}};
}

ErrorRegressor regressor_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw DataError("not a daepos model file");
    const auto version = j.at("version").get<int>();
    if (version != kModelVersion) throw DataError(fmt::format("unsupported model file version {}", version));
    const auto spec = j.at("spec").get<ModelSpec>();
    return ErrorRegressor(spec, j.at("input_width").get<std::size_t>(), model_from_json(spec.family, j.at("model")));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_regressor(std::ostream& out, const ErrorRegressor& model) { out << to_json(model).dump() << '\n'; }

ErrorRegressor load_regressor(std::istream& in) {
  try {
    return regressor_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace daepos
