#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "scamguard/error.hpp"

namespace scamguard {

/// IEEE-754 bit pattern of a double as 16 lowercase hex digits.
inline std::string encode_hex_double(double v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return std::string(buf, 16);
}

inline double decode_hex_double(std::string_view s) {
  if (s.size() != 16) throw Error(ErrorKind::SchemaMismatch, "hex double must have 16 digits");
  std::uint64_t bits = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw Error(ErrorKind::SchemaMismatch, "bad hex digit");
    bits = (bits << 4) | static_cast<std::uint64_t>(d);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace scamguard
