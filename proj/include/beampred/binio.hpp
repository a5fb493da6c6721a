// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary writer/reader over byte strings.

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace beampred::binio
{

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

// Thrown when a read runs past the end of the buffer.
class TruncatedError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class Writer
{
  public:
    template <class T>
        requires std::is_arithmetic_v<T>
    void put(T v)
    {
        char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        buf_.append(b, sizeof(T));
    }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void i32(std::int32_t v) { put(v); }
    void f64(double v) { put(v); }
    void bytes(std::string_view s) { buf_.append(s); }
    void str(std::string_view s)
    {
        u64(s.size());
        buf_.append(s);
    }
    void f64s(std::span<const double> v)
    {
        for (double x : v)
            f64(x);
    }
    void c128(std::complex<double> z)
    {
        f64(z.real());
        f64(z.imag());
    }

    const std::string &data() const { return buf_; }
    std::string take() { return std::move(buf_); }

  private:
    std::string buf_;
};

class Reader
{
  public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <class T>
        requires std::is_arithmetic_v<T>
    T get()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int32_t i32() { return get<std::int32_t>(); }
    double f64() { return get<double>(); }
    std::string bytes(std::size_t n)
    {
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::string str(std::size_t max_len = std::size_t{1} << 24)
    {
        const auto n = u64();
        if (n > max_len)
            throw TruncatedError("string length " + std::to_string(n) + " exceeds limit");
        return bytes(static_cast<std::size_t>(n));
    }
    std::vector<double> f64s(std::size_t n)
    {
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::complex<double> c128()
    {
        const double re = f64();
        return {re, f64()};
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

  private:
    void need(std::size_t n) const
    {
        if (n > data_.size() - pos_)
            throw TruncatedError("unexpected end of data");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string &path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace beampred::binio
