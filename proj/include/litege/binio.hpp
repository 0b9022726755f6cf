#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "litege/error.hpp"

namespace litege {

// Little-endian binary buffer codecs shared by the on-disk formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void magic(const char tag[4]) { buf_.append(tag, 4); }
  void bytes(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void magic(const char tag[4]) {
    need(4);
    if (std::memcmp(data_.data() + pos_, tag, 4) != 0)
      fail_invalid(origin_ + ": bad magic, expected '" + std::string(tag, 4) + "'");
    pos_ += 4;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_done() {
    if (remaining() != 0)
      fail_invalid(origin_ + ": " + std::to_string(remaining()) +
                   " trailing bytes");
  }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n)
      fail_invalid(origin_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::string_view data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace litege
