#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sonalign::osc {

using Blob = std::vector<uint8_t>;

// Supported argument types: int32 ('i'), float32 ('f'), string ('s'), blob ('b').
using Arg = std::variant<int32_t, float, std::string, Blob>;

struct Message {
  std::string address;  // must begin with '/'
  std::vector<Arg> args;

  bool operator==(const Message&) const = default;
};

// Binary layout: NUL-padded address, NUL-padded type-tag string ("," + one tag
// per argument), then each argument big-endian on a 4-byte boundary.
// The result length is always a multiple of 4.
std::vector<uint8_t> encode(const Message& msg);

// Inverse of encode on its image; throws OscError with the byte offset on
// truncation, bad padding, or unknown type tags.
Message decode(const uint8_t* data, size_t size);

inline Message decode(const std::vector<uint8_t>& bytes) {
  return decode(bytes.data(), bytes.size());
}

}  // namespace sonalign::osc
