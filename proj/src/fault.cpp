#include <stdexcept>

#include "ledboard/transport.hpp"

namespace ledboard::transport {

void FaultProfile::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(bit_flip_probability) || !ok(drop_probability))
    throw std::invalid_argument("fault probabilities must be in [0, 1]");
}

FaultInjector::FaultInjector(const FaultProfile& p) : profile_(p), rng_(p.seed) {
  profile_.validate();
}

bool FaultInjector::chance(double p) {
  if (p <= 0.0) return false;
  // 53-bit uniform in [0, 1); the distribution classes are not portable.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return u < p;
}

std::vector<std::uint8_t> FaultInjector::apply(std::span<const std::uint8_t> bs) {
  std::vector<std::uint8_t> out;
  out.reserve(bs.size());
  for (std::uint8_t b : bs) {
    if (chance(profile_.drop_probability)) continue;
    for (int bit = 0; bit < 8; ++bit)
      if (chance(profile_.bit_flip_probability)) b ^= static_cast<std::uint8_t>(1u << bit);
    out.push_back(b);
  }
  return out;
}

std::vector<std::uint8_t> inject_faults(std::span<const std::uint8_t> bs,
                                        const FaultProfile& p) {
  return FaultInjector(p).apply(bs);
}

}  // namespace ledboard::transport
