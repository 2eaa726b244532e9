#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "mvfuse/errors.hpp"
#include "mvfuse/types.hpp"

// Little-endian binary writer/reader with a trailing crc32 footer, shared by
// the model, head and scene formats. Multi-byte values are written as raw
// IEEE-754 / two's-complement bytes; a big-endian host is rejected up front.

namespace mvfuse::binio {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

class Writer {
 public:
  void magic(const std::string& m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) { raw(&v, sizeof v); }

  void u64(std::uint64_t v) { raw(&v, sizeof v); }

  void f64(double v) { raw(&v, sizeof v); }

  void i32(std::int32_t v) { raw(&v, sizeof v); }

  // Row-major dump of an Eigen matrix.
  template <typename Derived>
  void matrix(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }

  // Appends the crc32 of everything written so far and flushes to disk.
  void finish(const std::string& path) {
    const std::uint32_t crc = crc32_of(bytes_.data(), bytes_.size());
    u32(crc);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("write failed: " + path);
  }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }

  static std::uint32_t crc32_of(const char* p, std::size_t n) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
  }

  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open: " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    bytes_.resize(static_cast<std::size_t>(size));
    if (size > 0) in.read(bytes_.data(), size);
    if (!in) throw IoError("read failed: " + path);
  }

  // Validates the magic string and the crc32 footer.
  void open(const std::string& expected_magic) {
    if (bytes_.size() < expected_magic.size() + 4) {
      throw FormatError(path_ + ": truncated header");
    }
    const std::uint32_t stored = peek_footer();
    const std::uint32_t computed = static_cast<std::uint32_t>(::crc32(
        0L, reinterpret_cast<const Bytef*>(bytes_.data()), static_cast<uInt>(bytes_.size() - 4)));
    if (std::string(bytes_.data(), expected_magic.size()) != expected_magic) {
      throw FormatError(path_ + ": bad magic, expected " + expected_magic);
    }
    if (stored != computed) throw ChecksumError(path_ + ": checksum mismatch");
    pos_ = expected_magic.size();
    end_ = bytes_.size() - 4;
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }

  std::int32_t i32() {
    std::int32_t v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }

  double f64() {
    double v;
    std::memcpy(&v, take(sizeof v), sizeof v);
    return v;
  }

  MatX matrix(Eigen::Index rows, Eigen::Index cols) {
    MatX m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }

  void expect_end() const {
    if (pos_ != end_) throw FormatError(path_ + ": trailing bytes in payload");
  }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > end_) throw FormatError(path_ + ": truncated payload");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t peek_footer() const {
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + bytes_.size() - 4, 4);
    return v;
  }

  std::string path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace mvfuse::binio
