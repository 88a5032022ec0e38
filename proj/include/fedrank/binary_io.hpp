#pragma once

// Little-endian binary encoding helpers shared by the embedding store, graph
// and checkpoint file formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedrank::binio {

// 64-bit FNV-1a. Used as the integrity digest of every binary format.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> data);
  void raw(std::string_view text);
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  // u16 length prefix followed by the bytes; throws if longer than 65535.
  void short_string(std::string_view s);

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  std::uint64_t digest() const { return fnv1a64(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every underflow throws FormatError("truncated ...").
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string short_string();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> data);

}  // namespace fedrank::binio
