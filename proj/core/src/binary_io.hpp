#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixbec::detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000FFFFFFFFull) << 32) | ((v & 0xFFFFFFFF00000000ull) >> 32);
    v = ((v & 0x0000FFFF0000FFFFull) << 16) | ((v & 0xFFFF0000FFFF0000ull) >> 16);
    v = ((v & 0x00FF00FF00FF00FFull) << 8) | ((v & 0xFF00FF00FF00FF00ull) >> 8);
  }
  return v;
}

inline void write_complex_le(std::ostream& out, std::span<const std::complex<double>> data) {
  for (const auto& z : data) {
    for (double part : {z.real(), z.imag()}) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(part));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
  }
  if (!out) throw std::runtime_error("binary write failed");
}

inline std::vector<std::complex<double>> read_complex_le(std::istream& in, std::size_t count) {
  std::vector<std::complex<double>> data(count);
  for (auto& z : data) {
    double parts[2];
    for (double& part : parts) {
      char buf[8];
      in.read(buf, 8);
      if (!in) throw std::runtime_error("binary read: unexpected end of data");
      std::uint64_t bits;
      std::memcpy(&bits, buf, 8);
      part = std::bit_cast<double>(to_little(bits));
    }
    z = {parts[0], parts[1]};
  }
  return data;
}

// Reads "key value" lines up to a line equal to "end".
template <class Handler>
void read_text_header(std::istream& in, const std::string& magic, Handler&& handle) {
  std::string line;
  if (!std::getline(in, line) || line != magic) {
    throw std::runtime_error("header: expected '" + magic + "'");
  }
  while (std::getline(in, line)) {
    if (line == "end") return;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw std::runtime_error("header: malformed line '" + line + "'");
    handle(line.substr(0, space), line.substr(space + 1));
  }
  throw std::runtime_error("header: missing 'end'");
}

}  // namespace mixbec::detail
