#include "daepos/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "daepos/error.hpp"

namespace daepos {

std::vector<EcdfPoint> ecdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<EcdfPoint> out;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.push_back({samples[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("pearson: sample sizes differ");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0 || sbb <= 0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> EvaluationReport::signed_errors() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(dae_error(p));
  return out;
}

EvaluationReport summarize(std::vector<ErrorPair> pairs, std::string label, std::string parameters) {
  if (pairs.empty()) throw DataError("cannot summarize an empty set of error pairs");
  EvaluationReport report;
  report.label = std::move(label);
  report.parameters = std::move(parameters);
  report.pairs = std::move(pairs);

  std::vector<double> pos, est;
  double abs_sum = 0, sq_sum = 0;
  for (const auto& p : report.pairs) {
    if (!std::isfinite(p.delta_pos) || !std::isfinite(p.delta_est))
      throw DataError("non-finite error value for point " + p.point_id);
    const double e = dae_error(p);
    abs_sum += std::abs(e);
    sq_sum += e * e;
    pos.push_back(p.delta_pos);
    est.push_back(p.delta_est);
  }
  const double n = static_cast<double>(report.pairs.size());
  report.mae = abs_sum / n;
  report.mse = sq_sum / n;
  report.pearson = pearson(pos, est);
  report.ecdf = ecdf(report.signed_errors());
  return report;
}

std::string model_label(const ModelSpec& spec, Variant variant) {
  return spec.short_name() + (variant == Variant::xy ? "-xy" : "");
}

EvaluationReport evaluate_cross_fit(const ModelSpec& spec, const DaeDataset& dataset,
                                    const EvaluationOptions& options) {
  if (dataset.records.empty()) throw DataError("cannot evaluate on an empty DAE dataset");
  std::map<std::size_t, std::vector<std::size_t>> folds;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) folds[dataset.records[i].fold].push_back(i);
  if (folds.size() < 2) throw DataError("cross_fit evaluation needs records from at least two folds");

  std::vector<ErrorPair> pairs(dataset.records.size());
  for (const auto& [fold, test] : folds) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
      if (dataset.records[i].fold != fold) train.push_back(i);
    if (options.on_fold) options.on_fold(fold, train, test);

    FeatureMatrix x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(dataset.width()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = dataset.records[train[r]].features.transpose();
      y[static_cast<Eigen::Index>(r)] = dataset.records[train[r]].label;
    }
    const auto model = fit(spec, x, y);

    FeatureMatrix xt(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(dataset.width()));
    for (std::size_t r = 0; r < test.size(); ++r)
      xt.row(static_cast<Eigen::Index>(r)) = dataset.records[test[r]].features.transpose();
    const auto predictions = model.predict_batch(xt);
    for (std::size_t r = 0; r < test.size(); ++r) {
      const auto& rec = dataset.records[test[r]];
      const auto& p = predictions[r];
      pairs[test[r]] = {rec.label, options.raw_predictions ? p.raw : p.estimate, rec.point_id};
    }
  }
  auto report = summarize(std::move(pairs), model_label(spec, dataset.variant), spec.parameters());
  report.protocol = "cross_fit";
  return report;
}

EvaluationReport evaluate_holdout(const ErrorRegressor& model, const DaeDataset& records, Variant variant,
                                  const EvaluationOptions& options) {
  if (records.records.empty()) throw DataError("holdout evaluation needs at least one record");
  if (records.width() != model.input_width())
    throw ContractError(fmt::format("holdout records have {} features, model expects {}", records.width(),
                                    model.input_width()));
  const auto predictions = model.predict_batch(records.features());
  std::vector<ErrorPair> pairs;
  pairs.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& rec = records.records[i];
    pairs.push_back({rec.label, options.raw_predictions ? predictions[i].raw : predictions[i].estimate, rec.point_id});
  }
  const auto& spec = model.spec();
  auto report = summarize(std::move(pairs), model_label(spec, variant), spec.parameters());
  report.protocol = "holdout";
  return report;
}

namespace {
void write_comment(std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
}
}  // namespace

void write_report_table(std::ostream& out, std::span<const EvaluationReport> reports, const std::string& comment) {
  write_comment(out, comment);
  out << "algorithm,parameters,MAE,MSE\n";
  for (const auto& r : reports)
    out << r.label << ',' << '"' << r.parameters << '"' << ',' << fmt::format("{:.3f},{:.3f}", r.mae, r.mse) << '\n';
}

void write_correlation_table(std::ostream& out, std::span<const EvaluationReport> reports,
                             const std::string& comment) {
  write_comment(out, comment);
  out << "algorithm,parameters,pearson\n";
  for (const auto& r : reports) {
    out << r.label << ',' << '"' << r.parameters << '"' << ',';
    if (r.pearson) out << fmt::format("{:.4f}", *r.pearson);
    out << '\n';
  }
}

void write_pairs(std::ostream& out, const EvaluationReport& report, const std::string& comment) {
  write_comment(out, comment);
  out << "point_id,delta_pos,delta_est\n";
  for (const auto& p : report.pairs) out << p.point_id << ',' << fmt::format("{},{}", p.delta_pos, p.delta_est) << '\n';
}

void write_ecdf(std::ostream& out, const EvaluationReport& report, const std::string& comment) {
  write_comment(out, comment);
  out << "signed_error,fraction\n";
  for (const auto& e : report.ecdf) out << fmt::format("{},{}", e.value, e.fraction) << '\n';
}

}  // namespace daepos
