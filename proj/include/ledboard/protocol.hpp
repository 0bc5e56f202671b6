#pragma once

// Byte <-> LED-state codec and the single-LED mask operations.
//
// The board protocol is exactly one byte per frame and that byte is the
// entire board state. LED #N lives in bit (N-1), so LED #1 is the LSB.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ledboard {

constexpr int kLedCount = 8;

class IndexOutOfRange : public std::out_of_range {
 public:
  explicit IndexOutOfRange(int n);
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// 1-based LED number, validated on construction.
class LedIndex {
 public:
  explicit LedIndex(int n);

  int number() const noexcept { return n_; }
  int bit() const noexcept { return n_ - 1; }
  std::uint8_t mask() const noexcept {
    return static_cast<std::uint8_t>(1u << bit());
  }

  friend bool operator==(LedIndex, LedIndex) = default;

 private:
  int n_;
};

/// On/off vector for the eight LEDs. leds[i] is LED #(i+1).
struct LedState {
  std::array<bool, kLedCount> leds{};

  bool lit(LedIndex n) const { return leds[static_cast<std::size_t>(n.bit())]; }
  int lit_count() const;

  friend bool operator==(const LedState&, const LedState&) = default;
};

LedState byte_to_state(std::uint8_t b) noexcept;
std::uint8_t state_to_byte(const LedState& s) noexcept;

std::uint8_t set_led(std::uint8_t b, LedIndex n) noexcept;
std::uint8_t toggle_led(std::uint8_t b, LedIndex n) noexcept;
// Unconditional clear. XOR only turns an LED off if it was already on.
std::uint8_t clear_led(std::uint8_t b, LedIndex n) noexcept;

// "00101000" for byte 20: LED #1 leftmost.
std::string led_string(const LedState& s);
// "00010100" for byte 20: conventional MSB-first binary.
std::string binary_string(std::uint8_t b);

}  // namespace ledboard
