#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace daepos {

using ApId = std::string;

// RSSI-valued feature vector aligned to an ApRegistry, optionally followed by
// the estimated (x, y) position.
using FeatureVector = Eigen::VectorXd;

// Row-per-sample feature matrix.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kMinRssiDbm = -120.0;
inline constexpr double kMaxRssiDbm = 0.0;
inline constexpr double kDefaultFillDbm = -99.0;
inline constexpr int kDefaultK = 4;
inline constexpr int kDefaultApCount = 35;
inline constexpr int kDefaultFolds = 5;

template <typename Scalar>
struct BasicPosition2D {
  Scalar x{0};
  Scalar y{0};

  friend bool operator==(const BasicPosition2D&, const BasicPosition2D&) = default;
};

using Position2D = BasicPosition2D<double>;

template <typename Scalar>
Scalar distance(const BasicPosition2D<Scalar>& a, const BasicPosition2D<Scalar>& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline bool is_finite(const Position2D& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// One scan: RSSI per detected access point plus the reference position where it
// was taken.
struct RadioSignature {
  std::string point_id;
  Position2D reference;
  std::map<ApId, double> readings;

  friend bool operator==(const RadioSignature&, const RadioSignature&) = default;
};

bool is_valid_rssi(double dbm);

// Throws DataError if the signature violates its invariants.
void validate(const RadioSignature& signature);

// Fixed AP column ordering: most available first.
struct ApRegistry {
  std::vector<ApId> aps;
  std::vector<std::size_t> availability;
  std::vector<double> mean_rssi;

  std::size_t size() const noexcept { return aps.size(); }
  bool empty() const noexcept { return aps.empty(); }
  // Index of `id` in the ordering, or -1.
  std::ptrdiff_t index_of(const ApId& id) const;

  friend bool operator==(const ApRegistry&, const ApRegistry&) = default;
};

enum class Variant { plain, xy };
enum class Grouping { by_signature, by_point };

std::string to_string(Variant v);
std::string to_string(Grouping g);
Variant parse_variant(const std::string& text);
Grouping parse_grouping(const std::string& text);

}  // namespace daepos
