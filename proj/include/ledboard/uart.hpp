#pragma once

// Software UART over sampled logic-level waveforms.
//
// Frames are start (low), data bits LSB first, stop (high). Inverted polarity
// flips every level, which is what a MAX232-style level shifter does between
// the TTL side and the RS-232 side of the cable.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ledboard::uart {

enum class Level : std::uint8_t { Low = 0, High = 1 };

constexpr Level flip(Level l) noexcept {
  return l == Level::High ? Level::Low : Level::High;
}

enum class Parity { None, Even, Odd };
enum class Polarity { True, Inverted };

struct FrameConfig {
  int baud = 2400;
  int data_bits = 8;
  Parity parity = Parity::None;
  int stop_bits = 1;
  Polarity polarity = Polarity::True;
  int oversample = 16;

  /// The board's link: 2400 baud, 8N1, true polarity.
  static FrameConfig t2400(int oversample = 16);

  /// Throws std::invalid_argument. Only Parity::None is supported.
  void validate() const;

  int bits_per_frame() const noexcept { return 1 + data_bits + stop_bits; }
  int samples_per_frame() const noexcept { return bits_per_frame() * oversample; }
  double sample_rate() const noexcept {
    return static_cast<double>(baud) * oversample;
  }
  Level idle_level() const noexcept {
    return polarity == Polarity::True ? Level::High : Level::Low;
  }

  friend bool operator==(const FrameConfig&, const FrameConfig&) = default;
};

struct Waveform {
  std::vector<Level> samples;
  double sample_rate = 0.0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

enum class ErrorKind { StopBit };

struct FramingError {
  std::size_t sample_offset = 0;  // start edge of the offending frame
  ErrorKind kind = ErrorKind::StopBit;

  friend bool operator==(const FramingError&, const FramingError&) = default;
};

struct DecodeResult {
  std::vector<std::uint8_t> bytes;
  std::vector<FramingError> errors;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

Waveform encode_byte(std::uint8_t b, const FrameConfig& cfg);
Waveform encode_bytes(std::span<const std::uint8_t> bs, int idle_bits,
                      const FrameConfig& cfg);

Waveform invert(const Waveform& w);

DecodeResult decode(const Waveform& w, const FrameConfig& cfg);

/// Incremental receiver. Feeding a waveform in any chunking produces the
/// same DecodeResult as decode() on the whole thing. Single writer.
class StreamDecoder {
 public:
  /// Throws std::invalid_argument if sample_rate < 4 * cfg.baud.
  StreamDecoder(const FrameConfig& cfg, double sample_rate);

  void feed(std::span<const Level> samples);
  void feed(Level sample);

  const DecodeResult& result() const noexcept { return result_; }
  /// Moves out everything decoded so far; the receiver state is kept.
  DecodeResult take();

  std::size_t samples_consumed() const noexcept { return position_; }
  bool in_frame() const noexcept { return in_frame_; }

 private:
  FrameConfig cfg_;
  std::vector<std::size_t> bit_offsets_;  // mid-bit offsets from the start edge
  DecodeResult result_;

  std::size_t position_ = 0;
  Level previous_ = Level::High;  // true-domain level, line assumed idle
  bool in_frame_ = false;
  std::size_t edge_ = 0;
  std::size_t next_bit_ = 0;
  unsigned shift_ = 0;
};

// Text format: "rate=<samples/s>" on the first line, then one '1'/'0' per
// sample. Whitespace in the sample body is ignored on read.
void write_waveform(std::ostream& os, const Waveform& w);
/// Throws std::runtime_error on malformed input.
Waveform read_waveform(std::istream& is);

}  // namespace ledboard::uart
