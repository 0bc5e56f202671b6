#pragma once

// Simulated LED board: the PIC16F84 register file as seen by the firmware
//
//   POKE TRISB,0 / POKE TRISA,31 / POKE PORTB,0
//   Loop: SERIN pinin,T2400,B0 ; POKE PORTB,B0 ; GOTO Loop
//
// Only the registers that program touches are modelled. PORTA inputs other
// than RA1 are don't-care.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ledboard/protocol.hpp"
#include "ledboard/uart.hpp"

namespace ledboard {

struct PicRegisters {
  std::uint8_t trisa = 31;
  std::uint8_t trisb = 0;
  std::uint8_t porta = 0;
  std::uint8_t portb = 0;

  friend bool operator==(const PicRegisters&, const PicRegisters&) = default;
};

struct DeviceState {
  PicRegisters regs;
  LedState leds;
  std::uint64_t frames_received = 0;
  std::uint64_t framing_errors = 0;

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

/// Single-owner state machine. Copy state() out for read-only snapshots.
class Device {
 public:
  explicit Device(uart::FrameConfig link = uart::FrameConfig::t2400());

  void reset();
  void feed_byte(std::uint8_t b);
  /// Decodes on the configured link.
  void feed_waveform(const uart::Waveform& w);
  void feed_waveform(const uart::Waveform& w, const uart::FrameConfig& cfg);

  const DeviceState& state() const noexcept { return state_; }
  const uart::FrameConfig& link() const noexcept { return link_; }

 private:
  uart::FrameConfig link_;
  DeviceState state_;
};

// "PORTB=0x14 LEDS=00101000", LED #1 leftmost.
std::string state_line(const DeviceState& s);

struct ElectricalParams {
  double vcc = 5.0;
  double r_led = 301.0;
  double vf_led = 2.0;  // typical red LED; not given for the board
  double max_pin_current_ma = 25.0;
};

struct LedCurrent {
  double milliamps = 0.0;
  bool over_limit = false;
};

class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-pin current through one lit LED. Throws InvalidParams when
/// vcc < vf_led or r_led <= 0.
LedCurrent led_current(const ElectricalParams& p);

// Aggregate PORTB drive for the lit LEDs in `s`. Informational only; the
// per-pin limit is the one checked.
double portb_current_ma(const ElectricalParams& p, const LedState& s);

}  // namespace ledboard
