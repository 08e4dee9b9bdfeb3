#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daepos/dae_dataset.hpp"
#include "daepos/regressors.hpp"

namespace daepos {

struct ErrorPair {
  double delta_pos = 0;  // true positioning error
  double delta_est = 0;  // estimated positioning error
  std::string point_id;
};

/// Signed estimation error delta_est - delta_pos: positive is pessimistic,
/// negative optimistic.
inline double dae_error(const ErrorPair& pair) { return pair.delta_est - pair.delta_pos; }

struct EcdfPoint {
  double value;
  double fraction;  // share of samples <= value
};

/// Right-continuous empirical CDF: one point per distinct value, ascending.
std::vector<EcdfPoint> ecdf(std::vector<double> samples);

/// Sample Pearson correlation; nullopt when fewer than two samples or either
/// side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

double median(std::vector<double> values);

struct EvaluationReport {
  std::string label;       // e.g. "RF-xy"
  std::string parameters;  // e.g. "trees=300"
  std::string protocol;    // "cross_fit" or "holdout"
  double mae = 0;
  double mse = 0;
  std::optional<double> pearson;
  std::vector<ErrorPair> pairs;
  std::vector<EcdfPoint> ecdf;

  std::vector<double> signed_errors() const;
};

EvaluationReport summarize(std::vector<ErrorPair> pairs, std::string label = {}, std::string parameters = {});

struct EvaluationOptions {
  bool raw_predictions = false;  // use unclamped model outputs
  // Called once per fold during cross_fit with the training and evaluated record
  // indices.
  std::function<void(std::size_t fold, std::span<const std::size_t> train, std::span<const std::size_t> test)>
      on_fold;
};

// Table label: family short name plus "-xy" for the xy variant.
std::string model_label(const ModelSpec& spec, Variant variant);

/// Refits `spec` once per DAE fold on the other folds' records and predicts the
/// held-out fold, so every record is estimated out-of-fit exactly once. Pairs
/// follow the dataset record order.
EvaluationReport evaluate_cross_fit(const ModelSpec& spec, const DaeDataset& dataset,
                                    const EvaluationOptions& options = {});

/// Evaluates an already fitted model on external records.
EvaluationReport evaluate_holdout(const ErrorRegressor& model, const DaeDataset& records, Variant variant,
                                  const EvaluationOptions& options = {});

/// Table CSV: algorithm,parameters,MAE,MSE
void write_report_table(std::ostream& out, std::span<const EvaluationReport> reports, const std::string& comment = {});
/// algorithm,parameters,pearson (empty when undefined)
void write_correlation_table(std::ostream& out, std::span<const EvaluationReport> reports,
                             const std::string& comment = {});
/// point_id,delta_pos,delta_est
void write_pairs(std::ostream& out, const EvaluationReport& report, const std::string& comment = {});
/// signed_error,fraction
void write_ecdf(std::ostream& out, const EvaluationReport& report, const std::string& comment = {});

}  // namespace daepos
