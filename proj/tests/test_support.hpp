#pragma once

#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "daepos/types.hpp"

namespace daepos::test {

// Random signatures over `n_aps` access points named "ap<i>". Integer RSSI keeps
// distance sums exact.
inline std::vector<RadioSignature> random_signatures(std::mt19937_64& rng, std::size_t n, std::size_t n_aps,
                                                     double detect_probability = 0.7, bool integer_rssi = true) {
  std::uniform_real_distribution<double> pos(0.0, 30.0);
  std::uniform_int_distribution<int> irssi(-95, -30);
  std::uniform_real_distribution<double> rrssi(-95.0, -30.0);
  std::bernoulli_distribution detected(detect_probability);
  std::vector<RadioSignature> out;
  for (std::size_t i = 0; i < n; ++i) {
    RadioSignature s;
    s.point_id = fmt::format("p{}", i);
    s.reference = {pos(rng), pos(rng)};
    for (std::size_t a = 0; a < n_aps; ++a)
      if (detected(rng)) s.readings[fmt::format("ap{}", a)] = integer_rssi ? irssi(rng) : rrssi(rng);
    if (s.readings.empty()) s.readings["ap0"] = integer_rssi ? irssi(rng) : rrssi(rng);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace daepos::test
