#include "daepos/pipeline.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "daepos/error.hpp"

namespace daepos {

using nlohmann::json;

std::vector<ModelEntry> reference_lineup() {
  auto make = [](ModelFamily family, Variant variant, auto&& tweak) {
    ModelEntry e;
    e.spec.family = family;
    e.variant = variant;
    tweak(e.spec);
    return e;
  };
  auto none = [](ModelSpec&) {};
  return {
      make(ModelFamily::linear, Variant::plain, none),
      make(ModelFamily::linear, Variant::xy, none),
      make(ModelFamily::forest, Variant::plain, [](ModelSpec& s) { s.trees = 100; }),
      make(ModelFamily::forest, Variant::xy, [](ModelSpec& s) { s.trees = 300; }),
      make(ModelFamily::knn, Variant::plain, [](ModelSpec& s) { s.k = 4; }),
      make(ModelFamily::knn, Variant::xy, [](ModelSpec& s) { s.k = 4; }),
      make(ModelFamily::network, Variant::plain, [](ModelSpec& s) { s.layers = {128, 128, 128}; }),
      make(ModelFamily::network, Variant::xy, [](ModelSpec& s) { s.layers = {256, 512, 256}; }),
  };
}

void PipelineConfig::validate() const {
  if (ap_count < 1) throw ConfigError("ap_count must be positive");
  if (k < 1) throw ConfigError("k must be positive");
  if (n_folds < 2) throw ConfigError("n_folds must be at least 2 (a single fold cannot separate map and test data)");
  if (!std::isfinite(fill) || fill < kMinRssiDbm || fill > kMaxRssiDbm)
    throw ConfigError(fmt::format("fill value {} dBm is outside [{}, {}]", fill, kMinRssiDbm, kMaxRssiDbm));
  if (models.empty()) throw ConfigError("no models configured");
  std::set<std::string> labels;
  for (const auto& m : models) {
    m.spec.validate();
    if (!labels.insert(m.label()).second) throw ConfigError("duplicate model label " + m.label());
  }
  for (const auto& t : transfer_models)
    if (!labels.count(t)) throw ConfigError("transfer model " + t + " is not among the configured models");
}

void to_json(json& j, const PipelineConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) {
    json entry = m.spec;
    entry["variant"] = to_string(m.variant);
    models.push_back(entry);
  }
  j = {{"input", c.input.string()},
       {"user_input", c.user_input ? json(c.user_input->string()) : json(nullptr)},
       {"format", to_string(c.format)},
       {"ap_count", c.ap_count},
       {"fill", c.fill},
       {"k", c.k},
       {"n_folds", c.n_folds},
       {"grouping", to_string(c.grouping)},
       {"weighting", c.weighting == NeighborWeighting::inverse_distance ? "inverse_distance" : "uniform"},
       {"models", models},
       {"transfer_models", c.transfer_models},
       {"raw_predictions", c.raw_predictions},
       {"seed", c.seed},
       {"output_dir", c.output_dir.string()}};
}

void from_json(const json& j, PipelineConfig& c) {
  c = PipelineConfig{};
  try {
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("user_input") && !j.at("user_input").is_null()) c.user_input = j.at("user_input").get<std::string>();
    if (j.contains("format")) c.format = parse_input_format(j.at("format").get<std::string>());
    if (j.contains("ap_count")) c.ap_count = j.at("ap_count").get<std::size_t>();
    if (j.contains("fill")) c.fill = j.at("fill").get<double>();
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("n_folds")) c.n_folds = j.at("n_folds").get<std::size_t>();
    if (j.contains("grouping")) c.grouping = parse_grouping(j.at("grouping").get<std::string>());
    if (j.contains("weighting")) {
      const auto w = j.at("weighting").get<std::string>();
      if (w == "uniform")
        c.weighting = NeighborWeighting::uniform;
      else if (w == "inverse_distance")
        c.weighting = NeighborWeighting::inverse_distance;
      else
        throw ConfigError("unknown weighting '" + w + "'");
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) {
        ModelEntry e;
        e.spec = m.get<ModelSpec>();
        if (m.contains("variant")) e.variant = parse_variant(m.at("variant").get<std::string>());
        c.models.push_back(std::move(e));
      }
    }
    if (j.contains("transfer_models")) c.transfer_models = j.at("transfer_models").get<std::vector<std::string>>();
    if (j.contains("raw_predictions")) c.raw_predictions = j.at("raw_predictions").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in).get<PipelineConfig>();
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
}

std::string config_hash(const PipelineConfig& config) {
  auto j = json(config);
  j.erase("output_dir");
  const auto text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string provenance_comment(const PipelineConfig& config) {
  return fmt::format("daepos config_hash={} seed={}", config_hash(config), config.seed);
}

void write_registry(std::ostream& out, const ApRegistry& registry, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "ap_id,availability,mean_rssi\n";
  for (std::size_t i = 0; i < registry.size(); ++i) {
    out << registry.aps[i] << ',';
    if (i < registry.availability.size()) out << registry.availability[i];
    out << ',';
    if (i < registry.mean_rssi.size()) out << fmt::format("{}", registry.mean_rssi[i]);
    out << '\n';
  }
}

namespace {

// Runs one pipeline stage, prefixing any failure with the stage name while
// keeping its error category.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const auto prefix = [&](const std::exception& e) { return fmt::format("stage '{}': {}", name, e.what()); };
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix(e));
  } catch (const DataError& e) {
    throw DataError(prefix(e));
  } catch (const ContractError& e) {
    throw ContractError(prefix(e));
  } catch (const std::filesystem::filesystem_error& e) {
    throw ConfigError(prefix(e));
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  stage("config", [&] { config.validate(); });
  const auto comment = provenance_comment(config);
  const auto& dir = config.output_dir;
  stage("config", [&] { std::filesystem::create_directories(dir); });

  PipelineResult result;
  const auto signatures = stage("ingest", [&] {
    auto sigs = read_signatures(config.input, config.format);
    for (const auto& s : sigs) validate(s);
    return sigs;
  });
  result.signature_count = signatures.size();
  {
    std::set<std::string> points, aps;
    for (const auto& s : signatures) {
      points.insert(s.point_id);
      for (const auto& [ap, _] : s.readings) aps.insert(ap);
    }
    result.point_count = points.size();
    result.distinct_aps = aps.size();
  }

  result.registry = stage("registry", [&] { return build_registry(signatures, config.ap_count); });
  stage("registry", [&] {
    auto out = open_output(dir / "registry.csv");
    write_registry(out, result.registry, comment);
  });

  std::vector<Variant> variants;
  for (const auto v : {Variant::plain, Variant::xy})
    for (const auto& m : config.models)
      if (m.variant == v) {
        variants.push_back(v);
        break;
      }

  const auto plan = stage("dataset", [&] { return make_fold_plan(signatures, config.n_folds, config.seed, config.grouping); });
  std::vector<std::pair<Variant, DaeDataset>> datasets;
  stage("dataset", [&] {
    for (const auto v : variants) {
      auto ds = build_dae_dataset(signatures, result.registry, plan, v, config.localization());
      auto out = open_output(dir / fmt::format("dae_dataset_{}.csv", to_string(v)));
      write_dae_dataset(out, ds, comment);
      result.mean_labels.emplace_back(v, ds.mean_label());
      datasets.emplace_back(v, std::move(ds));
    }
  });
  auto dataset_for = [&](Variant v) -> const DaeDataset& {
    for (const auto& [variant, ds] : datasets)
      if (variant == v) return ds;
    throw ContractError("dataset variant not built");
  };

  EvaluationOptions eval_options;
  eval_options.raw_predictions = config.raw_predictions;
  stage("evaluate", [&] {
    for (const auto& entry : config.models) {
      auto spec = entry.spec;
      spec.seed = config.seed;
      result.reports.push_back(evaluate_cross_fit(spec, dataset_for(entry.variant), eval_options));
    }
  });

  if (config.user_input && !config.transfer_models.empty()) {
    stage("transfer", [&] {
      auto user = read_signatures(*config.user_input, config.format);
      for (const auto& s : user) validate(s);
      for (const auto& label : config.transfer_models) {
        const auto it = std::find_if(config.models.begin(), config.models.end(),
                                     [&](const ModelEntry& m) { return m.label() == label; });
        auto spec = it->spec;
        spec.seed = config.seed;
        const auto model = fit(spec, dataset_for(it->variant));
        const auto records =
            build_holdout_records(signatures, result.registry, user, it->variant, config.localization());
        if (!result.user_mean_error) result.user_mean_error = records.mean_label();
        auto report = evaluate_holdout(model, records, it->variant, eval_options);
        report.parameters = fmt::format("{} ({})", label, spec.family == ModelFamily::forest
                                                              ? std::to_string(spec.trees)
                                                              : spec.parameters());
        report.label = "user";
        {
          auto out = open_output(dir / fmt::format("pairs_user_{}.csv", label));
          write_pairs(out, report, comment);
        }
        {
          auto out = open_output(dir / fmt::format("ecdf_user_{}.csv", label));
          write_ecdf(out, report, comment);
        }
        result.transfer_reports.push_back(std::move(report));
      }
    });
  }

  stage("report", [&] {
    std::vector<EvaluationReport> table = result.reports;
    table.insert(table.end(), result.transfer_reports.begin(), result.transfer_reports.end());
    {
      auto out = open_output(dir / "report.csv");
      write_report_table(out, table, comment);
    }
    {
      auto out = open_output(dir / "correlation.csv");
      write_correlation_table(out, table, comment);
    }
    for (const auto& r : result.reports) {
      {
        auto out = open_output(dir / fmt::format("pairs_{}.csv", r.label));
        write_pairs(out, r, comment);
      }
      auto out = open_output(dir / fmt::format("ecdf_{}.csv", r.label));
      write_ecdf(out, r, comment);
    }
  });
  return result;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  auto j = to_json(bundle.model);
  if (bundle.layout) {
    const auto& l = *bundle.layout;
    j["features"] = {{"registry", l.registry.aps},
                     {"fill", l.fill},
                     {"k", l.k},
                     {"variant", to_string(l.variant)},
                     {"weighting", l.weighting == NeighborWeighting::inverse_distance ? "inverse_distance" : "uniform"}};
  }
  auto out = open_output(path);
  out << j.dump() << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  ModelBundle bundle{regressor_from_json(j), std::nullopt};
  if (j.contains("features")) {
    try {
      const auto& f = j.at("features");
      FeatureLayout l;
      l.registry.aps = f.at("registry").get<std::vector<std::string>>();
      l.fill = f.at("fill").get<double>();
      l.k = f.at("k").get<std::size_t>();
      l.variant = parse_variant(f.at("variant").get<std::string>());
      l.weighting = f.value("weighting", std::string("uniform")) == "inverse_distance"
                        ? NeighborWeighting::inverse_distance
                        : NeighborWeighting::uniform;
      bundle.layout = std::move(l);
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed feature layout in model file: ") + e.what());
    }
  }
  return bundle;
}

std::vector<ScanEstimate> predict_scans(const ModelBundle& bundle, std::span<const RadioSignature> map_signatures,
                                        std::span<const RadioSignature> scans, const PipelineConfig& fallback,
                                        Variant fallback_variant) {
  FeatureLayout layout;
  if (bundle.layout) {
    layout = *bundle.layout;
  } else {
    layout.registry = build_registry(map_signatures, fallback.ap_count);
    layout.fill = fallback.fill;
    layout.k = fallback.k;
    layout.variant = fallback_variant;
    layout.weighting = fallback.weighting;
  }
  const auto width = layout.registry.size() + (layout.variant == Variant::xy ? 2 : 0);
  if (width != bundle.model.input_width())
    throw ContractError(fmt::format("feature width mismatch: model expects {}, scans produce {}",
                                    bundle.model.input_width(), width));

  const auto map = RadioMap::from_signatures(map_signatures, layout.registry, layout.fill);
  std::vector<ScanEstimate> out;
  out.reserve(scans.size());
  for (const auto& scan : scans) {
    const auto rssi = vectorize(scan, layout.registry, layout.fill);
    const auto est = localize(rssi, map, layout.k, layout.weighting);
    const auto features = layout.variant == Variant::xy ? append_position(rssi, est.position) : rssi;
    out.push_back({scan.point_id, est.position, bundle.model.predict(features)});
  }
  return out;
}

}  // namespace daepos
