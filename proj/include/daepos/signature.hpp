#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "daepos/types.hpp"

namespace daepos {

enum class InputFormat {
  canonical,  // wide CSV: point_id,x,y,<ap_1>,...,<ap_n>; empty cell = missing
  zenodo,     // long CSV: one row per (scan, access point) reading
};

InputFormat parse_input_format(const std::string& text);
std::string to_string(InputFormat f);

/// Parses a scan table into signatures, one per scan.
///
/// Lines starting with `#` before the header are treated as comments. RSSI cells
/// that are empty, non-numeric or outside [-120, 0] dBm count as missing.
/// Throws FormatError for a bad header, RowError for a bad data row and
/// DataError for an input without data rows.
std::vector<RadioSignature> parse_signatures(std::istream& in, InputFormat format = InputFormat::canonical);
std::vector<RadioSignature> read_signatures(const std::filesystem::path& path,
                                            InputFormat format = InputFormat::canonical);

/// Writes the canonical wide CSV. AP columns are the lexicographically sorted
/// union of all readings. `comment`, when non-empty, is emitted as a leading `# `
/// line.
void write_signatures(std::ostream& out, std::span<const RadioSignature> signatures,
                      const std::string& comment = {});

/// Ranks access points by availability (number of signatures in which the AP was
/// detected), ties broken by higher mean RSSI and then by ApId, and keeps the
/// first `max_aps`.
ApRegistry build_registry(std::span<const RadioSignature> signatures, std::size_t max_aps);

/// Aligns the readings to the registry order, substituting `fill` for APs the
/// scan did not detect. Readings of APs outside the registry are dropped.
FeatureVector vectorize(const RadioSignature& signature, const ApRegistry& registry,
                        double fill = kDefaultFillDbm);

FeatureMatrix vectorize_all(std::span<const RadioSignature> signatures, const ApRegistry& registry,
                            double fill = kDefaultFillDbm);

// Appends (x, y) to a feature vector.
FeatureVector append_position(const FeatureVector& features, const Position2D& position);

}  // namespace daepos
