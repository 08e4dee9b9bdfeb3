#pragma once

#include <cstdint>
#include <vector>

#include "daepos/types.hpp"

namespace daepos {

// Log-distance path loss world with independent Gaussian shadowing per scan and
// per access point.
struct SynthWorld {
  std::vector<Position2D> ap_positions;
  double tx_power = -40.0;          // dBm at the 1 m reference distance
  double path_loss_exponent = 3.0;
  double shadowing_sigma = 4.0;     // dB
  double detection_floor = -95.0;   // dBm; weaker readings are not reported
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

inline constexpr double kReferenceDistance = 1.0;

// Noise-free received power at `distance` meters from an AP.
double mean_rssi(const SynthWorld& world, double distance);

// Name of the i-th synthetic AP ("ap00", "ap01", ...).
ApId synth_ap_id(std::size_t index);

/// One scan at `position`. The draw is a pure function of (world.seed,
/// position, scan_index). Readings above 0 dBm are clamped to 0.
RadioSignature sample_signature(const SynthWorld& world, const Position2D& position, std::size_t scan_index = 0,
                                std::string point_id = {});

struct GridSpec {
  Position2D origin;
  std::size_t nx = 1;
  std::size_t ny = 1;
  double spacing = 1.0;
};

/// `scans_per_point` signatures at every grid node, point ids "p<ix>_<iy>".
/// Throws DataError if some scan detects no AP at all.
std::vector<RadioSignature> generate_grid_dataset(const SynthWorld& world, const GridSpec& grid,
                                                  std::size_t scans_per_point);

/// `n_aps` APs scattered uniformly over a region twice the width x height survey
/// area and centred on it, so some of them are only heard near the edges.
SynthWorld make_office_world(double width, double height, std::size_t n_aps, std::uint64_t seed);

}  // namespace daepos
