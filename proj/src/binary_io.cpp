#include "pushsort/binary_io.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>

namespace pushsort {

namespace {
template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    T out;
    auto* s = reinterpret_cast<const unsigned char*>(&v);
    auto* d = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) d[i] = s[sizeof(T) - 1 - i];
    return out;
  }
  return v;
}
}  // namespace

BinaryWriter::BinaryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw CheckpointError("cannot open " + path.string() + " for writing");
}

void BinaryWriter::header(const std::array<char, 4>& magic) {
  out_.write(magic.data(), 4);
  u32(kFormatVersion);
}

void BinaryWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void BinaryWriter::u32(std::uint32_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinaryWriter::u64(std::uint64_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64s(std::span<const double> values) {
  for (double v : values) f64(v);
}

void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw CheckpointError("write failed for " + path_.string());
  out_.close();
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw CheckpointError("cannot open " + path.string());
}

void BinaryReader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n)) {
    throw CheckpointError(path_.string() + ": truncated file");
  }
}

void BinaryReader::header(const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  read(got.data(), 4);
  if (got != magic) {
    throw CheckpointError(fmt::format("{}: bad magic (expected {})", path_.string(),
                                      std::string(magic.begin(), magic.end())));
  }
  const std::uint32_t version = u32();
  if (version != kFormatVersion) {
    throw CheckpointError(fmt::format("{}: format version {} not supported (expected {})",
                                      path_.string(), version, kFormatVersion));
  }
}

std::uint8_t BinaryReader::u8() {
  char c = 0;
  read(&c, 1);
  return static_cast<std::uint8_t>(c);
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v = 0;
  read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v = 0;
  read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> BinaryReader::f64s(std::size_t count) {
  std::vector<double> out(count);
  f64s(out);
  return out;
}

void BinaryReader::f64s(std::span<double> out) {
  for (double& v : out) v = f64();
}

bool BinaryReader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

void write_model_file(const std::filesystem::path& path, const std::array<char, 4>& magic,
                      std::span<const double> parameters,
                      std::span<const std::span<const double>> optimizer_state) {
  BinaryWriter w(path);
  w.header(magic);
  w.u64(parameters.size());
  w.f64s(parameters);
  for (const auto& s : optimizer_state) {
    if (s.size() != parameters.size()) {
      throw std::invalid_argument("write_model_file: optimizer state size mismatch");
    }
    w.f64s(s);
  }
  w.close();
}

ModelFile read_model_file(const std::filesystem::path& path, const std::array<char, 4>& magic,
                          std::size_t optimizer_vectors) {
  BinaryReader r(path);
  r.header(magic);
  const std::uint64_t n = r.u64();
  if (n > (1ULL << 32)) throw CheckpointError(path.string() + ": implausible parameter count");
  ModelFile file;
  file.parameters = r.f64s(n);
  for (std::size_t i = 0; i < optimizer_vectors; ++i) file.optimizer_state.push_back(r.f64s(n));
  if (!r.at_end()) throw CheckpointError(path.string() + ": trailing bytes");
  return file;
}

}  // namespace pushsort
