#pragma once

// Little-endian binary envelope shared by all romforge file formats.

#include "romforge/error.hpp"
#include "romforge/types.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace romforge::binio {

static_assert(std::endian::native == std::endian::little, "romforge file formats assume a little-endian host");

class Writer {
 public:
  void magic(const char (&m)[9]) { raw(m, 8); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  template <typename Derived>
  void f64s(const Eigen::DenseBase<Derived>& m) {
    // row-major element order
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  void bytes(const std::vector<std::uint8_t>& b) { raw(b.data(), b.size()); }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(buf_.data(), std::streamsize(buf_.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  static Reader load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read from '" + path + "' failed");
    return Reader(std::move(data));
  }
  explicit Reader(std::vector<char> data) : buf_(std::move(data)) {}

  void expect_magic(const char (&m)[9], const char* format) {
    need(8, std::string("truncated ") + format + " header");
    if (std::memcmp(buf_.data() + pos_, m, 8) != 0)
      throw FormatError(std::string("bad magic, not a ") + format + " file", pos_);
    pos_ += 8;
  }
  std::uint32_t u32(const char* what) { return scalar<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return scalar<std::uint64_t>(what); }
  double f64(const char* what) { return scalar<double>(what); }
  /// Finite double; NaN or Inf is a format error.
  double finite(const char* what) {
    const std::size_t at = pos_;
    const double v = f64(what);
    if (!std::isfinite(v)) throw FormatError(std::string("non-finite value in ") + what, at);
    return v;
  }
  Matrix matrix(Index rows, Index cols, const char* what) {
    need(std::size_t(rows * cols) * 8, std::string("truncated payload in ") + what);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = finite(what);
    return m;
  }
  Vector vector(Index n, const char* what) { return matrix(n, 1, what); }
  std::vector<std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, std::string("truncated payload in ") + what);
    std::vector<std::uint8_t> out(buf_.begin() + std::ptrdiff_t(pos_), buf_.begin() + std::ptrdiff_t(pos_ + n));
    pos_ += n;
    return out;
  }
  void expect_end() const {
    if (pos_ != buf_.size()) throw FormatError("trailing bytes after payload", pos_);
  }
  std::size_t offset() const { return pos_; }
  std::size_t size() const { return buf_.size(); }

 private:
  template <typename T>
  T scalar(const char* what) {
    need(sizeof(T), std::string("truncated field ") + what);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n, const std::string& msg) const {
    if (buf_.size() - pos_ < n) throw FormatError(msg, buf_.size());
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace romforge::binio
