#include "daepos/types.hpp"

#include <algorithm>

#include "daepos/error.hpp"

namespace daepos {

bool is_valid_rssi(double dbm) { return std::isfinite(dbm) && dbm >= kMinRssiDbm && dbm <= kMaxRssiDbm; }

void validate(const RadioSignature& signature) {
  if (!is_finite(signature.reference))
    throw DataError("signature '" + signature.point_id + "' has a non-finite reference position");
  if (signature.readings.empty())
    throw DataError("signature '" + signature.point_id + "' has no RSSI readings");
  for (const auto& [ap, rssi] : signature.readings) {
    if (ap.empty()) throw DataError("signature '" + signature.point_id + "' has an empty AP id");
    if (!is_valid_rssi(rssi))
      throw DataError("signature '" + signature.point_id + "' has RSSI out of range for AP " + ap);
  }
}

std::ptrdiff_t ApRegistry::index_of(const ApId& id) const {
  const auto it = std::find(aps.begin(), aps.end(), id);
  return it == aps.end() ? -1 : std::distance(aps.begin(), it);
}

std::string to_string(Variant v) { return v == Variant::xy ? "xy" : "plain"; }
std::string to_string(Grouping g) { return g == Grouping::by_point ? "by_point" : "by_signature"; }

Variant parse_variant(const std::string& text) {
  if (text == "plain") return Variant::plain;
  if (text == "xy") return Variant::xy;
  throw ConfigError("unknown variant '" + text + "' (expected plain or xy)");
}

Grouping parse_grouping(const std::string& text) {
  if (text == "by_signature") return Grouping::by_signature;
  if (text == "by_point") return Grouping::by_point;
  throw ConfigError("unknown grouping '" + text + "' (expected by_signature or by_point)");
}

}  // namespace daepos
