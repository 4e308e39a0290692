#pragma once

// Binary container shared by datasets and checkpoints:
//
//   bytes 0..7   magic "CLAPLAB1"
//   bytes 8..11  header length N, uint32 little-endian
//   next N bytes UTF-8 JSON header (carries "format_version" and "dtype")
//   remainder    row-major little-endian payload, tensors concatenated in
//                the order listed by the header's "tensors" array

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "svrlab/core_math.hpp"

namespace svrlab {

inline constexpr std::string_view kContainerMagic = "CLAPLAB1";
inline constexpr int kFormatVersion = 1;

struct Container {
  nlohmann::json header;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> bytes);

void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

void append_f32(std::vector<std::uint8_t>& out, VecView values);
void append_f64(std::vector<std::uint8_t>& out, VecView values);
// Reads `count` values starting at byte `offset`; advances offset.
Vec read_f32(std::span<const std::uint8_t> payload, std::size_t& offset, std::size_t count);
Vec read_f64(std::span<const std::uint8_t> payload, std::size_t& offset, std::size_t count);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a64_hex(std::span<const std::uint8_t> bytes);
std::string file_hash(const std::string& path);

}  // namespace svrlab
