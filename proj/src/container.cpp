#include "svrlab/container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace svrlab {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_container(const Container& c) {
  const std::string header = c.header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(kContainerMagic.size() + 4 + header.size() + c.payload.size());
  out.insert(out.end(), kContainerMagic.begin(), kContainerMagic.end());
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), c.payload.begin(), c.payload.end());
  return out;
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = kContainerMagic.size();
  if (bytes.size() < magic_len + 4 || std::memcmp(bytes.data(), kContainerMagic.data(), magic_len) != 0) {
    throw Error(Errc::Format, "missing CLAPLAB1 magic");
  }
  const std::uint32_t header_len = get_u32(bytes.data() + magic_len);
  const std::size_t header_start = magic_len + 4;
  if (bytes.size() < header_start + header_len) throw Error(Errc::Format, "truncated header");
  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.begin() + header_start, bytes.begin() + header_start + header_len);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Format, std::string("bad header JSON: ") + e.what());
  }
  if (!c.header.is_object() || !c.header.contains("format_version")) {
    throw Error(Errc::Format, "header lacks format_version");
  }
  if (c.header["format_version"] != kFormatVersion) throw Error(Errc::Format, "unsupported format_version");
  c.payload.assign(bytes.begin() + header_start + header_len, bytes.end());
  return c;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "short write to '" + path + "'");
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_container(const std::string& path, const Container& c) { write_file(path, encode_container(c)); }

Container read_container(const std::string& path) { return decode_container(read_file(path)); }

void append_f32(std::vector<std::uint8_t>& out, VecView values) {
  out.reserve(out.size() + 4 * values.size());
  for (double v : values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

void append_f64(std::vector<std::uint8_t>& out, VecView values) {
  out.reserve(out.size() + 8 * values.size());
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Vec read_f32(std::span<const std::uint8_t> payload, std::size_t& offset, std::size_t count) {
  if (offset + 4 * count > payload.size()) throw Error(Errc::Format, "payload shorter than header declares");
  Vec out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<double>(std::bit_cast<float>(get_u32(payload.data() + offset)));
    offset += 4;
  }
  return out;
}

Vec read_f64(std::span<const std::uint8_t> payload, std::size_t& offset, std::size_t count) {
  if (offset + 8 * count > payload.size()) throw Error(Errc::Format, "payload shorter than header declares");
  Vec out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::bit_cast<double>(get_u64(payload.data() + offset));
    offset += 8;
  }
  return out;
}

std::string fnv1a64_hex(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string& path) { return fnv1a64_hex(read_file(path)); }

}  // namespace svrlab
