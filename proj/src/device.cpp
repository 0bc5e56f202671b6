#include "ledboard/device.hpp"

#include <cstdio>

namespace ledboard {

Device::Device(uart::FrameConfig link) : link_(link) {
  link_.validate();
  reset();
}

void Device::reset() { state_ = DeviceState{}; }

void Device::feed_byte(std::uint8_t b) {
  // POKE PORTB,B0. Last byte wins; there is no receive queue on the PIC.
  state_.regs.portb = b;
  state_.leds = byte_to_state(b);
  ++state_.frames_received;
}

void Device::feed_waveform(const uart::Waveform& w) { feed_waveform(w, link_); }

void Device::feed_waveform(const uart::Waveform& w, const uart::FrameConfig& cfg) {
  const auto rx = uart::decode(w, cfg);
  for (auto b : rx.bytes) feed_byte(b);
  state_.framing_errors += rx.errors.size();
}

std::string state_line(const DeviceState& s) {
  char hex[8];
  std::snprintf(hex, sizeof hex, "0x%02X", static_cast<unsigned>(s.regs.portb));
  return std::string("PORTB=") + hex + " LEDS=" + led_string(s.leds);
}

LedCurrent led_current(const ElectricalParams& p) {
  if (!(p.r_led > 0)) throw InvalidParams("r_led must be positive");
  if (p.vcc < p.vf_led) throw InvalidParams("vcc below LED forward voltage");
  LedCurrent out;
  out.milliamps = (p.vcc - p.vf_led) / p.r_led * 1000.0;
  out.over_limit = out.milliamps > p.max_pin_current_ma;
  return out;
}

double portb_current_ma(const ElectricalParams& p, const LedState& s) {
  return led_current(p).milliamps * s.lit_count();
}

}  // namespace ledboard
