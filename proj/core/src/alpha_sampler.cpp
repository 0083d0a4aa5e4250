#include <algorithm>

#include "spectralds/distill.hpp"
#include "spectralds/error.hpp"
#include "spectralds/rng.hpp"

namespace spectralds {

AlphaSampler::AlphaSampler(AlphaSamplerConfig config)
    : config_(config), rng_(make_stream(config.seed, "alpha-sampler")) {
  const double total = config_.weight_body + config_.weight_high + config_.weight_extreme;
  if (!(total > 0.0) || config_.weight_body < 0 || config_.weight_high < 0 ||
      config_.weight_extreme < 0)
    throw DomainError("AlphaSampler: mixture weights must be non-negative with a positive sum");
  if (!(config_.body_low >= 0.0 && config_.body_low < config_.upper &&
        config_.high_low < config_.upper && config_.extreme_low < config_.upper &&
        config_.upper <= 1.0))
    throw DomainError("AlphaSampler: band edges must lie in [0, 1] below the upper edge");
}

double AlphaSampler::next() { return draw(rng_); }

std::vector<double> AlphaSampler::next(std::size_t count) {
  std::vector<double> out(count);
  for (auto& v : out) v = next();
  return out;
}

double AlphaSampler::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double total = config_.weight_body + config_.weight_high + config_.weight_extreme;
  const double pick = unit(rng) * total;
  double low = config_.body_low;
  if (pick >= config_.weight_body + config_.weight_high)
    low = config_.extreme_low;
  else if (pick >= config_.weight_body)
    low = config_.high_low;
  double value = low + (config_.upper - low) * unit(rng);
  value = std::min(value, std::nextafter(config_.upper, 0.0));
  if (config_.symmetric && unit(rng) < 0.5) value = -value;
  return value;
}

}  // namespace spectralds
