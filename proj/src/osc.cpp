#include "sonalign/osc.hpp"

#include <bit>
#include <cstring>

#include "sonalign/errors.hpp"

namespace sonalign::osc {

namespace {

// OSC strings are terminated by 1-4 NULs so the field ends on a 4-byte boundary.
void put_padded_string(std::vector<uint8_t>& out, const std::string& s) {
  out.insert(out.end(), s.begin(), s.end());
  const size_t pad = 4 - s.size() % 4;
  out.insert(out.end(), pad, 0);
}

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

char type_tag(const Arg& arg) {
  switch (arg.index()) {
    case 0: return 'i';
    case 1: return 'f';
    case 2: return 's';
    default: return 'b';
  }
}

std::string offset_msg(const char* what, size_t offset) {
  return std::string(what) + " at byte offset " + std::to_string(offset);
}

class Reader {
 public:
  Reader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  size_t offset() const { return pos_; }
  bool done() const { return pos_ == size_; }

  std::string read_padded_string() {
    const size_t start = pos_;
    size_t nul = start;
    while (nul < size_ && data_[nul] != 0) ++nul;
    if (nul == size_) {
      throw OscError(offset_msg("unterminated string", start));
    }
    const size_t len = nul - start;
    const size_t field = len + 4 - len % 4;
    if (start + field > size_) {
      throw OscError(offset_msg("truncated string padding", nul));
    }
    for (size_t i = start + len; i < start + field; ++i) {
      if (data_[i] != 0) {
        throw OscError(offset_msg("bad string padding", i));
      }
    }
    pos_ = start + field;
    return std::string(reinterpret_cast<const char*>(data_ + start), len);
  }

  uint32_t read_u32_be() {
    if (pos_ + 4 > size_) {
      throw OscError(offset_msg("truncated packet", pos_));
    }
    uint32_t v = (static_cast<uint32_t>(data_[pos_]) << 24) |
                 (static_cast<uint32_t>(data_[pos_ + 1]) << 16) |
                 (static_cast<uint32_t>(data_[pos_ + 2]) << 8) |
                 static_cast<uint32_t>(data_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  Blob read_blob() {
    const size_t header = pos_;
    const uint32_t len = read_u32_be();
    const size_t field = (static_cast<size_t>(len) + 3) / 4 * 4;
    if (pos_ + field > size_) {
      throw OscError(offset_msg("truncated blob", header));
    }
    Blob b(data_ + pos_, data_ + pos_ + len);
    for (size_t i = pos_ + len; i < pos_ + field; ++i) {
      if (data_[i] != 0) {
        throw OscError(offset_msg("bad blob padding", i));
      }
    }
    pos_ += field;
    return b;
  }

 private:
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<uint8_t> encode(const Message& msg) {
  if (msg.address.empty() || msg.address.front() != '/') {
    throw OscError("address must be non-empty and begin with '/': \"" + msg.address + "\"");
  }
  if (msg.address.find('\0') != std::string::npos) {
    throw OscError("address must not contain NUL bytes");
  }

  std::vector<uint8_t> out;
  put_padded_string(out, msg.address);

  std::string tags = ",";
  for (const Arg& arg : msg.args) tags.push_back(type_tag(arg));
  put_padded_string(out, tags);

  for (const Arg& arg : msg.args) {
    switch (arg.index()) {
      case 0:
        put_u32_be(out, static_cast<uint32_t>(std::get<int32_t>(arg)));
        break;
      case 1:
        put_u32_be(out, std::bit_cast<uint32_t>(std::get<float>(arg)));
        break;
      case 2: {
        const std::string& s = std::get<std::string>(arg);
        if (s.find('\0') != std::string::npos) {
          throw OscError("string argument must not contain NUL bytes");
        }
        put_padded_string(out, s);
        break;
      }
      default: {
        const Blob& b = std::get<Blob>(arg);
        put_u32_be(out, static_cast<uint32_t>(b.size()));
        out.insert(out.end(), b.begin(), b.end());
        out.insert(out.end(), (4 - b.size() % 4) % 4, 0);
        break;
      }
    }
  }
  return out;
}

Message decode(const uint8_t* data, size_t size) {
  if (size == 0 || size % 4 != 0) {
    throw OscError("packet length " + std::to_string(size) + " is not a positive multiple of 4");
  }
  Reader r(data, size);

  Message msg;
  msg.address = r.read_padded_string();
  if (msg.address.empty() || msg.address.front() != '/') {
    throw OscError(offset_msg("address does not begin with '/'", 0));
  }

  const size_t tags_offset = r.offset();
  const std::string tags = r.read_padded_string();
  if (tags.empty() || tags.front() != ',') {
    throw OscError(offset_msg("type-tag string does not begin with ','", tags_offset));
  }

  for (size_t i = 1; i < tags.size(); ++i) {
    switch (tags[i]) {
      case 'i':
        msg.args.emplace_back(static_cast<int32_t>(r.read_u32_be()));
        break;
      case 'f':
        msg.args.emplace_back(std::bit_cast<float>(r.read_u32_be()));
        break;
      case 's':
        msg.args.emplace_back(r.read_padded_string());
        break;
      case 'b':
        msg.args.emplace_back(r.read_blob());
        break;
      default:
        throw OscError("unknown type tag '" + std::string(1, tags[i]) + "' at byte offset " +
                       std::to_string(tags_offset + i));
    }
  }

  if (!r.done()) {
    throw OscError(offset_msg("trailing bytes after last argument", r.offset()));
  }
  return msg;
}

}  // namespace sonalign::osc
