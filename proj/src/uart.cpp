#include "ledboard/uart.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ledboard::uart {

FrameConfig FrameConfig::t2400(int oversample) {
  FrameConfig cfg;
  cfg.oversample = oversample;
  return cfg;
}

void FrameConfig::validate() const {
  if (baud <= 0) throw std::invalid_argument("baud must be positive");
  if (oversample < 4) throw std::invalid_argument("oversample must be >= 4");
  if (data_bits < 5 || data_bits > 8)
    throw std::invalid_argument("data_bits must be in 5..8");
  if (stop_bits < 1 || stop_bits > 2)
    throw std::invalid_argument("stop_bits must be 1 or 2");
  if (parity != Parity::None) throw std::invalid_argument("only parity=none is supported");
}

namespace {

void append_bit(std::vector<Level>& out, Level level, const FrameConfig& cfg) {
  if (cfg.polarity == Polarity::Inverted) level = flip(level);
  out.insert(out.end(), static_cast<std::size_t>(cfg.oversample), level);
}

void append_frame(std::vector<Level>& out, std::uint8_t b, const FrameConfig& cfg) {
  append_bit(out, Level::Low, cfg);
  for (int i = 0; i < cfg.data_bits; ++i)
    append_bit(out, ((b >> i) & 1u) ? Level::High : Level::Low, cfg);
  for (int i = 0; i < cfg.stop_bits; ++i) append_bit(out, Level::High, cfg);
}

}  // namespace

Waveform encode_byte(std::uint8_t b, const FrameConfig& cfg) {
  cfg.validate();
  Waveform w;
  w.sample_rate = cfg.sample_rate();
  w.samples.reserve(static_cast<std::size_t>(cfg.samples_per_frame()));
  append_frame(w.samples, b, cfg);
  return w;
}

Waveform encode_bytes(std::span<const std::uint8_t> bs, int idle_bits,
                      const FrameConfig& cfg) {
  cfg.validate();
  if (idle_bits < 0) throw std::invalid_argument("idle_bits must be >= 0");
  Waveform w;
  w.sample_rate = cfg.sample_rate();
  if (bs.empty()) return w;
  const auto frame = static_cast<std::size_t>(cfg.samples_per_frame());
  const auto gap = static_cast<std::size_t>(idle_bits * cfg.oversample);
  w.samples.reserve(bs.size() * frame + (bs.size() - 1) * gap);
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (i > 0)
      for (int k = 0; k < idle_bits; ++k) append_bit(w.samples, Level::High, cfg);
    append_frame(w.samples, bs[i], cfg);
  }
  return w;
}

Waveform invert(const Waveform& w) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.reserve(w.samples.size());
  for (Level l : w.samples) out.samples.push_back(flip(l));
  return out;
}

DecodeResult decode(const Waveform& w, const FrameConfig& cfg) {
  StreamDecoder rx(cfg, w.sample_rate);
  rx.feed(w.samples);
  return rx.take();
}

StreamDecoder::StreamDecoder(const FrameConfig& cfg, double sample_rate) : cfg_(cfg) {
  cfg_.validate();
  if (!(sample_rate >= 4.0 * cfg_.baud))
    throw std::invalid_argument("sample rate must be at least 4x the baud rate");
  const double samples_per_bit = sample_rate / cfg_.baud;
  // Bit k is read once, at the centre of its nominal period.
  for (int k = 0; k < cfg_.bits_per_frame(); ++k)
    bit_offsets_.push_back(
        static_cast<std::size_t>(std::floor((k + 0.5) * samples_per_bit)));
}

void StreamDecoder::feed(std::span<const Level> samples) {
  for (Level l : samples) feed(l);
}

void StreamDecoder::feed(Level sample) {
  const Level level = cfg_.polarity == Polarity::Inverted ? flip(sample) : sample;
  const std::size_t here = position_++;

  if (!in_frame_) {
    if (previous_ == Level::High && level == Level::Low) {
      in_frame_ = true;
      edge_ = here;
      next_bit_ = 0;
      shift_ = 0;
    }
    previous_ = level;
    if (!in_frame_ || bit_offsets_[0] != 0) return;
  }

  if (here - edge_ != bit_offsets_[next_bit_]) return;

  const auto bit = next_bit_++;
  const auto data_end = static_cast<std::size_t>(1 + cfg_.data_bits);
  if (bit == 0) {
    if (level != Level::Low) {
      // Glitch, not a start bit.
      in_frame_ = false;
      previous_ = level;
    }
    return;
  }
  if (bit < data_end) {
    if (level == Level::High) shift_ |= 1u << (bit - 1);
    return;
  }
  if (level != Level::High) {
    result_.errors.push_back({edge_, ErrorKind::StopBit});
    in_frame_ = false;
    previous_ = level;
    return;
  }
  if (next_bit_ == bit_offsets_.size()) {
    result_.bytes.push_back(static_cast<std::uint8_t>(shift_));
    in_frame_ = false;
    previous_ = level;
  }
}

DecodeResult StreamDecoder::take() {
  DecodeResult out = std::move(result_);
  result_ = {};
  return out;
}

}  // namespace ledboard::uart
