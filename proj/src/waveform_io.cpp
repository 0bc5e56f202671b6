#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ledboard/uart.hpp"

namespace ledboard::uart {

void write_waveform(std::ostream& os, const Waveform& w) {
  std::ostringstream rate;
  rate.precision(17);
  rate << w.sample_rate;
  os << "rate=" << rate.str() << '\n';
  std::string body;
  body.reserve(w.samples.size());
  for (Level l : w.samples) body.push_back(l == Level::High ? '1' : '0');
  os << body << '\n';
}

Waveform read_waveform(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("waveform: missing header");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.rfind("rate=", 0) != 0)
    throw std::runtime_error("waveform: header must start with 'rate='");

  Waveform w;
  const std::string value = header.substr(5);
  std::size_t used = 0;
  try {
    w.sample_rate = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("waveform: bad rate '" + value + "'");
  }
  if (used != value.size() || !(w.sample_rate > 0))
    throw std::runtime_error("waveform: bad rate '" + value + "'");

  char c;
  while (is.get(c)) {
    if (c == '1') {
      w.samples.push_back(Level::High);
    } else if (c == '0') {
      w.samples.push_back(Level::Low);
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw std::runtime_error(std::string("waveform: unexpected character '") + c + "'");
    }
  }
  return w;
}

}  // namespace ledboard::uart
