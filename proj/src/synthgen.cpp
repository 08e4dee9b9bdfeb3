#include "daepos/synthgen.hpp"

#include <bit>
#include <random>

#include <fmt/format.h>

#include "daepos/error.hpp"

namespace daepos {

void SynthWorld::validate() const {
  if (ap_positions.empty()) throw ConfigError("synthetic world needs at least one AP");
  if (!(path_loss_exponent > 0)) throw ConfigError("path loss exponent must be positive");
  if (!(shadowing_sigma >= 0)) throw ConfigError("shadowing sigma must be non-negative");
  if (!(detection_floor < tx_power)) throw ConfigError("detection floor must lie below the transmit power");
  if (detection_floor < kMinRssiDbm) throw ConfigError("detection floor below the representable RSSI range");
}

double mean_rssi(const SynthWorld& world, double distance) {
  const double d = std::max(distance, kReferenceDistance);
  return world.tx_power - 10.0 * world.path_loss_exponent * std::log10(d / kReferenceDistance);
}

ApId synth_ap_id(std::size_t index) { return fmt::format("ap{:02d}", index); }

RadioSignature sample_signature(const SynthWorld& world, const Position2D& position, std::size_t scan_index,
                                std::string point_id) {
  world.validate();
  if (!is_finite(position)) throw ContractError("sample_signature: non-finite position");

  const auto xb = std::bit_cast<std::uint64_t>(position.x);
  const auto yb = std::bit_cast<std::uint64_t>(position.y);
  std::seed_seq seq{static_cast<std::uint32_t>(world.seed), static_cast<std::uint32_t>(world.seed >> 32),
                    static_cast<std::uint32_t>(xb), static_cast<std::uint32_t>(xb >> 32),
                    static_cast<std::uint32_t>(yb), static_cast<std::uint32_t>(yb >> 32),
                    static_cast<std::uint32_t>(scan_index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> shadowing(0.0, 1.0);

  RadioSignature sig;
  sig.point_id = point_id.empty() ? fmt::format("{}_{}", position.x, position.y) : std::move(point_id);
  sig.reference = position;
  for (std::size_t i = 0; i < world.ap_positions.size(); ++i) {
    // Always draw so that each AP consumes the same stream slot.
    const double noise = world.shadowing_sigma * shadowing(rng);
    const double rssi = mean_rssi(world, distance(position, world.ap_positions[i])) + noise;
    if (rssi < world.detection_floor) continue;
    sig.readings.emplace(synth_ap_id(i), std::min(rssi, kMaxRssiDbm));
  }
  return sig;
}

std::vector<RadioSignature> generate_grid_dataset(const SynthWorld& world, const GridSpec& grid,
                                                  std::size_t scans_per_point) {
  if (grid.nx == 0 || grid.ny == 0) throw ConfigError("grid must have at least one node");
  std::vector<RadioSignature> out;
  out.reserve(grid.nx * grid.ny * scans_per_point);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const Position2D p{grid.origin.x + grid.spacing * static_cast<double>(ix),
                         grid.origin.y + grid.spacing * static_cast<double>(iy)};
      const auto id = fmt::format("p{}_{}", ix, iy);
      for (std::size_t s = 0; s < scans_per_point; ++s) {
        auto sig = sample_signature(world, p, s, id);
        if (sig.readings.empty()) throw DataError(fmt::format("synthetic scan at point {} detected no AP", id));
        out.push_back(std::move(sig));
      }
    }
  }
  return out;
}

SynthWorld make_office_world(double width, double height, std::size_t n_aps, std::uint64_t seed) {
  if (n_aps == 0) throw ConfigError("synthetic world needs at least one AP");
  SynthWorld world;
  world.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  // Scatter APs around and beyond the surveyed area so that some are weak.
  std::uniform_real_distribution<double> ux(-0.5 * width, 1.5 * width);
  std::uniform_real_distribution<double> uy(-0.5 * height, 1.5 * height);
  for (std::size_t i = 0; i < n_aps; ++i) world.ap_positions.push_back({ux(rng), uy(rng)});
  return world;
}

}  // namespace daepos
