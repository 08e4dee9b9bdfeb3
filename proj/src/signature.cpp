#include "daepos/signature.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "csv_util.hpp"
#include "daepos/error.hpp"

namespace daepos {

using detail::parse_double;
using detail::split_csv;

InputFormat parse_input_format(const std::string& text) {
  if (text == "canonical") return InputFormat::canonical;
  if (text == "zenodo") return InputFormat::zenodo;
  throw ConfigError("unknown input format '" + text + "' (expected canonical or zenodo)");
}

std::string to_string(InputFormat f) { return f == InputFormat::zenodo ? "zenodo" : "canonical"; }

namespace {

// Reads the first non-comment line. Returns false at end of stream.
bool read_header(std::istream& in, std::string& header, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) line = detail::strip_bom(std::move(line));
    if (detail::is_comment_or_blank(line)) continue;
    header = std::move(line);
    return true;
  }
  return false;
}

std::vector<RadioSignature> parse_canonical(std::istream& in) {
  std::string header;
  std::size_t line_no = 0;
  if (!read_header(in, header, line_no)) throw DataError("empty signature file");

  const auto columns = split_csv(header);
  if (columns.size() < 3 || columns[0] != "point_id" || columns[1] != "x" || columns[2] != "y")
    throw FormatError("header must start with point_id,x,y");
  std::vector<ApId> aps;
  std::set<std::string_view> seen;
  for (std::size_t c = 3; c < columns.size(); ++c) {
    if (columns[c].empty()) throw FormatError(fmt::format("empty AP id in header column {}", c + 1));
    if (!seen.insert(columns[c]).second)
      throw FormatError(fmt::format("duplicate AP column '{}'", columns[c]));
    aps.emplace_back(columns[c]);
  }
  if (aps.empty()) throw FormatError("header declares no AP columns");

  std::vector<RadioSignature> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != columns.size())
      throw RowError(row, fmt::format("expected {} cells, found {}", columns.size(), cells.size()));
    RadioSignature sig;
    sig.point_id = std::string(cells[0]);
    if (sig.point_id.empty()) throw RowError(row, "empty point_id");
    const auto x = parse_double(cells[1]);
    const auto y = parse_double(cells[2]);
    if (!x || !std::isfinite(*x)) throw RowError(row, fmt::format("non-numeric x coordinate '{}'", cells[1]));
    if (!y || !std::isfinite(*y)) throw RowError(row, fmt::format("non-numeric y coordinate '{}'", cells[2]));
    sig.reference = {*x, *y};
    for (std::size_t c = 0; c < aps.size(); ++c) {
      const auto v = parse_double(cells[c + 3]);
      if (v && is_valid_rssi(*v)) sig.readings.emplace(aps[c], *v);
    }
    if (sig.readings.empty()) throw RowError(row, "no RSSI readings");
    out.push_back(std::move(sig));
  }
  if (out.empty()) throw DataError("signature file has a header but no data rows");
  return out;
}

// Locates the first header column matching one of the aliases (case-insensitive).
std::ptrdiff_t find_column(const std::vector<std::string>& header, std::initializer_list<std::string_view> aliases) {
  for (std::size_t i = 0; i < header.size(); ++i)
    for (const auto alias : aliases)
      if (header[i] == alias) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

std::vector<RadioSignature> parse_zenodo(std::istream& in) {
  std::string header_line;
  std::size_t line_no = 0;
  if (!read_header(in, header_line, line_no)) throw DataError("empty signature file");

  std::vector<std::string> header;
  for (const auto cell : split_csv(header_line)) {
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    header.push_back(std::move(lower));
  }
  const auto col_scan = find_column(header, {"scan_id", "scan", "measurement_id", "fingerprint_id", "sample"});
  const auto col_point = find_column(header, {"point_id", "point", "location_id", "pose_id"});
  const auto col_time = find_column(header, {"timestamp", "time", "scan_time"});
  const auto col_x = find_column(header, {"x", "x_ref", "pos_x", "ref_x"});
  const auto col_y = find_column(header, {"y", "y_ref", "pos_y", "ref_y"});
  const auto col_ap = find_column(header, {"bssid", "mac", "ap", "ap_id"});
  const auto col_rssi = find_column(header, {"rssi", "level", "signal", "rss"});
  if (col_x < 0 || col_y < 0) throw FormatError("long-format header lacks x,y columns");
  if (col_ap < 0 || col_rssi < 0) throw FormatError("long-format header lacks access point / RSSI columns");

  std::vector<RadioSignature> out;
  std::unordered_map<std::string, std::size_t> by_key;
  std::string previous_key;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::is_comment_or_blank(line)) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw RowError(row, fmt::format("expected {} cells, found {}", header.size(), cells.size()));
    const auto x = parse_double(cells[col_x]);
    const auto y = parse_double(cells[col_y]);
    if (!x || !std::isfinite(*x)) throw RowError(row, fmt::format("non-numeric x coordinate '{}'", cells[col_x]));
    if (!y || !std::isfinite(*y)) throw RowError(row, fmt::format("non-numeric y coordinate '{}'", cells[col_y]));
    const std::string point = col_point >= 0 ? std::string(cells[col_point]) : fmt::format("{}_{}", *x, *y);

    // Without an explicit scan id, a scan is a contiguous run of rows at one point.
    std::string key;
    if (col_scan >= 0)
      key = std::string(cells[col_scan]);
    else if (col_time >= 0)
      key = point + '\x1f' + std::string(cells[col_time]);
    else
      key = point + '\x1f' + fmt::format("{}_{}", *x, *y);

    std::size_t index = 0;
    if (col_scan < 0 && col_time < 0) {
      if (out.empty() || key != previous_key) {
        out.push_back({point, {*x, *y}, {}});
      }
      index = out.size() - 1;
      previous_key = key;
    } else if (const auto it = by_key.find(key); it != by_key.end()) {
      index = it->second;
    } else {
      index = out.size();
      by_key.emplace(key, index);
      out.push_back({point, {*x, *y}, {}});
    }

    const std::string ap(cells[col_ap]);
    const auto rssi = parse_double(cells[col_rssi]);
    if (!ap.empty() && rssi && is_valid_rssi(*rssi)) {
      // Repeated detections of one AP within a scan keep the strongest.
      auto [it, inserted] = out[index].readings.emplace(ap, *rssi);
      if (!inserted) it->second = std::max(it->second, *rssi);
    }
  }
  if (out.empty()) throw DataError("signature file has a header but no data rows");
  std::erase_if(out, [](const RadioSignature& s) { return s.readings.empty(); });
  if (out.empty()) throw DataError("no scan contains a valid RSSI reading");
  return out;
}

}  // namespace

std::vector<RadioSignature> parse_signatures(std::istream& in, InputFormat format) {
  return format == InputFormat::zenodo ? parse_zenodo(in) : parse_canonical(in);
}

std::vector<RadioSignature> read_signatures(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open signature file " + path.string());
  return parse_signatures(in, format);
}

void write_signatures(std::ostream& out, std::span<const RadioSignature> signatures, const std::string& comment) {
  std::set<ApId> ap_union;
  for (const auto& s : signatures)
    for (const auto& [ap, _] : s.readings) ap_union.insert(ap);

  auto check_id = [](const std::string& id) {
    if (id.empty() || id.find_first_of(",\n\r#") != std::string::npos)
      throw ContractError("identifier '" + id + "' cannot be written to CSV");
  };

  if (!comment.empty()) out << "# " << comment << '\n';
  out << "point_id,x,y";
  for (const auto& ap : ap_union) {
    check_id(ap);
    out << ',' << ap;
  }
  out << '\n';
  for (const auto& s : signatures) {
    check_id(s.point_id);
    out << s.point_id << ',' << fmt::format("{}", s.reference.x) << ',' << fmt::format("{}", s.reference.y);
    for (const auto& ap : ap_union) {
      out << ',';
      if (const auto it = s.readings.find(ap); it != s.readings.end()) out << fmt::format("{}", it->second);
    }
    out << '\n';
  }
}

ApRegistry build_registry(std::span<const RadioSignature> signatures, std::size_t max_aps) {
  if (max_aps < 1) throw ContractError("registry size must be at least 1");
  if (signatures.empty()) throw DataError("cannot build an AP registry from an empty dataset");

  std::map<ApId, std::vector<double>> detections;
  for (const auto& s : signatures)
    for (const auto& [ap, rssi] : s.readings) detections[ap].push_back(rssi);

  struct Candidate {
    const ApId* id;
    std::size_t count;
    double mean;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(detections.size());
  for (auto& [ap, values] : detections) {
    // Sorted summation keeps the mean independent of signature order.
    std::sort(values.begin(), values.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    candidates.push_back({&ap, values.size(), mean});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.mean != b.mean) return a.mean > b.mean;
    return *a.id < *b.id;
  });

  ApRegistry registry;
  const auto kept = std::min(max_aps, candidates.size());
  for (std::size_t i = 0; i < kept; ++i) {
    registry.aps.push_back(*candidates[i].id);
    registry.availability.push_back(candidates[i].count);
    registry.mean_rssi.push_back(candidates[i].mean);
  }
  return registry;
}

FeatureVector vectorize(const RadioSignature& signature, const ApRegistry& registry, double fill) {
  if (registry.empty()) throw ContractError("cannot vectorize against an empty registry");
  FeatureVector v(static_cast<Eigen::Index>(registry.size()));
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const auto it = signature.readings.find(registry.aps[i]);
    v[static_cast<Eigen::Index>(i)] = it == signature.readings.end() ? fill : it->second;
  }
  return v;
}

FeatureMatrix vectorize_all(std::span<const RadioSignature> signatures, const ApRegistry& registry, double fill) {
  FeatureMatrix m(static_cast<Eigen::Index>(signatures.size()), static_cast<Eigen::Index>(registry.size()));
  for (std::size_t i = 0; i < signatures.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = vectorize(signatures[i], registry, fill).transpose();
  return m;
}

FeatureVector append_position(const FeatureVector& features, const Position2D& position) {
  FeatureVector out(features.size() + 2);
  out << features, position.x, position.y;
  return out;
}

}  // namespace daepos
