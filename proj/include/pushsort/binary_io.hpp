#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushsort {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::array<char, 4> kModelMagic{'P', 'S', 'D', 'Q'};
inline constexpr std::array<char, 4> kMaskMagic{'P', 'S', 'M', 'K'};
inline constexpr std::array<char, 4> kBufferMagic{'P', 'S', 'R', 'B'};

/// Missing, truncated, or mismatched binary artifact.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian primitive writer over a file.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path);

  void header(const std::array<char, 4>& magic);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void f64s(std::span<const double> values);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  /// Checks magic and version; throws CheckpointError on mismatch.
  void header(const std::array<char, 4>& magic);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::vector<double> f64s(std::size_t count);
  void f64s(std::span<double> out);
  bool at_end();

 private:
  void read(char* dst, std::size_t n);

  std::filesystem::path path_;
  std::ifstream in_;
};

/// Parameters followed by `state.size()` optimizer vectors of the same length.
struct ModelFile {
  std::vector<double> parameters;
  std::vector<std::vector<double>> optimizer_state;
};

void write_model_file(const std::filesystem::path& path, const std::array<char, 4>& magic,
                      std::span<const double> parameters,
                      std::span<const std::span<const double>> optimizer_state);

ModelFile read_model_file(const std::filesystem::path& path, const std::array<char, 4>& magic,
                          std::size_t optimizer_vectors);

}  // namespace pushsort
