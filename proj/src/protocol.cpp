#include "ledboard/protocol.hpp"

#include <algorithm>

namespace ledboard {

IndexOutOfRange::IndexOutOfRange(int n)
    : std::out_of_range("LED index " + std::to_string(n) + " outside 1.." +
                        std::to_string(kLedCount)),
      index_(n) {}

LedIndex::LedIndex(int n) : n_(n) {
  if (n < 1 || n > kLedCount) throw IndexOutOfRange(n);
}

int LedState::lit_count() const {
  return static_cast<int>(std::count(leds.begin(), leds.end(), true));
}

LedState byte_to_state(std::uint8_t b) noexcept {
  LedState s;
  for (int i = 0; i < kLedCount; ++i) s.leds[static_cast<std::size_t>(i)] = ((b >> i) & 1u) != 0;
  return s;
}

std::uint8_t state_to_byte(const LedState& s) noexcept {
  unsigned b = 0;
  for (int i = 0; i < kLedCount; ++i)
    if (s.leds[static_cast<std::size_t>(i)]) b |= 1u << i;
  return static_cast<std::uint8_t>(b);
}

std::uint8_t set_led(std::uint8_t b, LedIndex n) noexcept {
  return static_cast<std::uint8_t>(b | n.mask());
}

std::uint8_t toggle_led(std::uint8_t b, LedIndex n) noexcept {
  return static_cast<std::uint8_t>(b ^ n.mask());
}

std::uint8_t clear_led(std::uint8_t b, LedIndex n) noexcept {
  return static_cast<std::uint8_t>(b & ~n.mask());
}

std::string led_string(const LedState& s) {
  std::string out;
  out.reserve(kLedCount);
  for (bool on : s.leds) out.push_back(on ? '1' : '0');
  return out;
}

std::string binary_string(std::uint8_t b) {
  std::string out;
  out.reserve(8);
  for (int i = 7; i >= 0; --i) out.push_back(((b >> i) & 1u) ? '1' : '0');
  return out;
}

}  // namespace ledboard
