// daepos: Wi-Fi fingerprinting with positioning-error estimation.
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 contract error.

#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "daepos/error.hpp"
#include "daepos/pipeline.hpp"
#include "daepos/synthgen.hpp"

namespace {

using namespace daepos;

struct GlobalFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::size_t k = 0;
  std::size_t ap_count = 0;
  double fill = 0;
  std::string variant;
  std::string grouping;
  std::string format;
  std::string out;
};

struct Options {
  CLI::Option* seed;
  CLI::Option* folds;
  CLI::Option* k;
  CLI::Option* ap_count;
  CLI::Option* fill;
  CLI::Option* grouping;
  CLI::Option* format;
  CLI::Option* out;
};

// Config file first, then every flag given on the command line.
PipelineConfig resolve_config(const GlobalFlags& f, const Options& o) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (*o.seed) c.seed = f.seed;
  if (*o.folds) c.n_folds = f.folds;
  if (*o.k) c.k = f.k;
  if (*o.ap_count) c.ap_count = f.ap_count;
  if (*o.fill) c.fill = f.fill;
  if (*o.grouping) c.grouping = parse_grouping(f.grouping);
  if (*o.format) c.format = parse_input_format(f.format);
  if (*o.out) c.output_dir = f.out;
  if (c.ap_count < 1) throw ConfigError("--ap-count must be positive");
  if (c.k < 1) throw ConfigError("--k must be positive");
  if (c.n_folds < 2) throw ConfigError("--folds must be at least 2");
  return c;
}

Variant variant_or(const GlobalFlags& f, Variant fallback) {
  return f.variant.empty() ? fallback : parse_variant(f.variant);
}

// Writes to `path`, or standard output when it is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  fn(out);
}

std::vector<std::size_t> parse_layers(const std::string& text) {
  std::vector<std::size_t> layers;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto token = text.substr(start, end - start);
    try {
      std::size_t used = 0;
      const auto v = std::stoul(token, &used);
      if (used != token.size() || v == 0) throw std::invalid_argument(token);
      layers.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("invalid --layers entry '" + token + "'");
    }
    start = end + 1;
  }
  return layers;
}

int run(int argc, char** argv) {
  CLI::App app{"Wi-Fi RSSI fingerprinting with dynamic accuracy estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  Options o{};
  app.add_option("--config", g.config, "JSON pipeline configuration; flags override it");
  o.seed = app.add_option("--seed", g.seed, "Random seed");
  o.folds = app.add_option("--folds", g.folds, "Number of folds for the DAE dataset");
  o.k = app.add_option("--k", g.k, "Neighbours used by the fingerprinting positioner");
  o.ap_count = app.add_option("--ap-count", g.ap_count, "Number of most available APs kept");
  o.fill = app.add_option("--fill", g.fill, "RSSI substituted for undetected APs (dBm)");
  app.add_option("--variant", g.variant, "Feature variant: plain or xy");
  o.grouping = app.add_option("--grouping", g.grouping, "Fold grouping: by_signature or by_point");
  o.format = app.add_option("--format", g.format, "Input format: canonical or zenodo");
  o.out = app.add_option("--out", g.out, "Output file or directory");

  std::string input, user_input, map_path, model_path, dataset_path;

  auto* ingest = app.add_subcommand("ingest", "Parse scans and print the AP registry");
  ingest->add_option("--input", input, "Signature file")->required();

  auto* build = app.add_subcommand("build-dataset", "Write the leave-fold-out DAE dataset as CSV");
  build->add_option("--input", input, "Signature file")->required();

  ModelSpec spec;
  std::string family = "forest", layers;
  auto* train = app.add_subcommand("train", "Fit an error model on the full DAE dataset");
  train->add_option("--input", input, "Signature file")->required();
  train->add_option("--model", family, "Model family: linear, knn, forest, network");
  train->add_option("--trees", spec.trees, "Forest size");
  train->add_option("--model-k", spec.k, "Neighbours for knn regression");
  train->add_option("--layers", layers, "Comma-separated hidden layer widths");
  train->add_option("--epochs", spec.epochs, "Network training epochs");
  train->add_option("--learning-rate", spec.learning_rate, "Network learning rate");
  train->add_option("--batch-size", spec.batch_size, "Network batch size");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-fit a DAE dataset, or score a model on external scans");
  evaluate->add_option("--dataset", dataset_path, "DAE dataset CSV for cross-fit evaluation");
  evaluate->add_option("--model", model_path, "Model file for holdout evaluation");
  evaluate->add_option("--map", map_path, "Radio map signatures (holdout)");
  evaluate->add_option("--input", input, "External signatures to score (holdout)");

  auto* predict = app.add_subcommand("predict", "Localize scans and estimate their positioning error");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--map", map_path, "Radio map signatures")->required();
  predict->add_option("--input", input, "Scans to localize")->required();

  GridSpec grid{{0, 0}, 13, 9, 1.5};
  std::size_t scans = 3, n_aps = 78;
  SynthWorld world;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic survey in canonical CSV");
  synth->add_option("--nx", grid.nx, "Grid nodes along x");
  synth->add_option("--ny", grid.ny, "Grid nodes along y");
  synth->add_option("--spacing", grid.spacing, "Grid spacing (m)");
  synth->add_option("--scans", scans, "Scans per grid node");
  synth->add_option("--aps", n_aps, "Number of access points");
  synth->add_option("--tx-power", world.tx_power, "RSSI at 1 m (dBm)");
  synth->add_option("--exponent", world.path_loss_exponent, "Path loss exponent");
  synth->add_option("--sigma", world.shadowing_sigma, "Shadowing standard deviation (dB)");
  synth->add_option("--floor", world.detection_floor, "Detection floor (dBm)");

  auto* run_cmd = app.add_subcommand("run", "Full pipeline: dataset, models, reports");
  run_cmd->add_option("--input", input, "Signature file (overrides config)");
  run_cmd->add_option("--user-input", user_input, "External signatures for the transfer experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto config = resolve_config(g, o);
  if (!input.empty()) config.input = input;

  if (*ingest) {
    const auto sigs = read_signatures(config.input, config.format);
    const auto registry = build_registry(sigs, config.ap_count);
    std::set<std::string> points, aps;
    for (const auto& s : sigs) {
      points.insert(s.point_id);
      for (const auto& [ap, _] : s.readings) aps.insert(ap);
    }
    std::cerr << fmt::format("{} signatures, {} points, {} distinct APs, {} retained\n", sigs.size(), points.size(),
                             aps.size(), registry.size());
    emit(g.out, [&](std::ostream& out) { write_registry(out, registry, provenance_comment(config)); });
  } else if (*build) {
    const auto sigs = read_signatures(config.input, config.format);
    const auto registry = build_registry(sigs, config.ap_count);
    const auto plan = make_fold_plan(sigs, config.n_folds, config.seed, config.grouping);
    const auto ds = build_dae_dataset(sigs, registry, plan, variant_or(g, Variant::plain), config.localization());
    std::cerr << fmt::format("{} records, mean true error {:.3f} m\n", ds.records.size(), ds.mean_label());
    emit(g.out, [&](std::ostream& out) { write_dae_dataset(out, ds, provenance_comment(config)); });
  } else if (*train) {
    if (g.out.empty()) throw ConfigError("train requires --out <model file>");
    spec.family = parse_model_family(family);
    if (!layers.empty()) spec.layers = parse_layers(layers);
    spec.seed = config.seed;
    const auto variant = variant_or(g, Variant::plain);
    const auto sigs = read_signatures(config.input, config.format);
    const auto registry = build_registry(sigs, config.ap_count);
    const auto plan = make_fold_plan(sigs, config.n_folds, config.seed, config.grouping);
    const auto ds = build_dae_dataset(sigs, registry, plan, variant, config.localization());
    ModelBundle bundle{fit(spec, ds), FeatureLayout{registry, config.fill, config.k, variant, config.weighting}};
    save_bundle(g.out, bundle);
    std::cerr << fmt::format("trained {} on {} records -> {}\n", model_label(spec, variant), ds.records.size(), g.out);
  } else if (*evaluate) {
    std::vector<EvaluationReport> reports;
    if (!model_path.empty()) {
      if (map_path.empty() || input.empty()) throw ConfigError("holdout evaluation needs --model, --map and --input");
      const auto bundle = load_bundle(model_path);
      if (!bundle.layout) throw ContractError("model file carries no feature layout; retrain with `train`");
      const auto& layout = *bundle.layout;
      const auto map_sigs = read_signatures(map_path, config.format);
      const auto user = read_signatures(input, config.format);
      const auto records = build_holdout_records(map_sigs, layout.registry, user, layout.variant,
                                                 {layout.k, layout.fill, layout.weighting});
      EvaluationOptions eo;
      eo.raw_predictions = config.raw_predictions;
      reports.push_back(evaluate_holdout(bundle.model, records, layout.variant, eo));
    } else {
      if (dataset_path.empty()) throw ConfigError("evaluate needs --dataset, or --model with --map and --input");
      std::ifstream in(dataset_path);
      if (!in) throw DataError("cannot open " + dataset_path);
      const auto ds = read_dae_dataset(in);
      EvaluationOptions eo;
      eo.raw_predictions = config.raw_predictions;
      for (const auto& entry : config.models) {
        if (entry.variant != ds.variant) continue;
        auto s = entry.spec;
        s.seed = config.seed;
        reports.push_back(evaluate_cross_fit(s, ds, eo));
      }
      if (reports.empty()) throw ConfigError("no configured model matches the dataset variant");
    }
    write_report_table(std::cout, reports, provenance_comment(config));
    if (!g.out.empty()) {
      std::filesystem::create_directories(g.out);
      for (const auto& r : reports) {
        const auto stem = r.protocol == "holdout" ? "user_" + r.label : r.label;
        std::ofstream pairs(std::filesystem::path(g.out) / ("pairs_" + stem + ".csv"), std::ios::binary);
        write_pairs(pairs, r, provenance_comment(config));
        std::ofstream cdf(std::filesystem::path(g.out) / ("ecdf_" + stem + ".csv"), std::ios::binary);
        write_ecdf(cdf, r, provenance_comment(config));
      }
    }
  } else if (*predict) {
    const auto bundle = load_bundle(model_path);
    const auto map_sigs = read_signatures(map_path, config.format);
    const auto scans_in = read_signatures(input, config.format);
    const auto rows = predict_scans(bundle, map_sigs, scans_in, config, variant_or(g, Variant::plain));
    std::cout << "x_est,y_est,delta_est\n";
    for (const auto& r : rows)
      std::cout << fmt::format("{},{},{}\n", r.position.x, r.position.y, r.error.estimate);
  } else if (*synth) {
    if (g.out.empty()) throw ConfigError("synth requires --out <csv file>");
    const auto width = grid.spacing * static_cast<double>(grid.nx - 1);
    const auto height = grid.spacing * static_cast<double>(grid.ny - 1);
    auto w = make_office_world(width, height, n_aps, config.seed);
    w.tx_power = world.tx_power;
    w.path_loss_exponent = world.path_loss_exponent;
    w.shadowing_sigma = world.shadowing_sigma;
    w.detection_floor = world.detection_floor;
    w.validate();
    const auto sigs = generate_grid_dataset(w, grid, scans);
    emit(g.out, [&](std::ostream& out) { write_signatures(out, sigs, provenance_comment(config)); });
    std::cerr << fmt::format("{} signatures at {} points -> {}\n", sigs.size(), grid.nx * grid.ny, g.out);
  } else if (*run_cmd) {
    if (!user_input.empty()) config.user_input = user_input;
    if (!g.variant.empty()) {
      const auto v = parse_variant(g.variant);
      std::erase_if(config.models, [&](const ModelEntry& m) { return m.variant != v; });
      std::erase_if(config.transfer_models, [&](const std::string& label) {
        return std::none_of(config.models.begin(), config.models.end(),
                            [&](const ModelEntry& m) { return m.label() == label; });
      });
    }
    if (config.input.empty()) throw ConfigError("run needs an input file (--input or config \"input\")");
    const auto result = run_pipeline(config);
    for (const auto& [v, mean] : result.mean_labels)
      std::cerr << fmt::format("mean true error ({}): {:.3f} m\n", to_string(v), mean);
    std::vector<EvaluationReport> table = result.reports;
    table.insert(table.end(), result.transfer_reports.begin(), result.transfer_reports.end());
    write_report_table(std::cout, table);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const daepos::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const daepos::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const daepos::ContractError& e) {
    std::cerr << "contract error: " << e.what() << '\n';
    return 3;
  }
}
