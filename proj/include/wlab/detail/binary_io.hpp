#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "wlab/errors.hpp"

namespace wlab::detail {

// Shared container framing: magic bytes, u64 little-endian header length,
// UTF-8 JSON header, then raw little-endian payload sections.

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (is.gcount() != 8) throw HeaderError("file ends inside header length");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_magic(std::ostream& os, const char* magic) {
    os.write(magic, static_cast<std::streamsize>(std::strlen(magic)));
}

inline void expect_magic(std::istream& is, const char* magic,
                         const char* what) {
    const std::size_t n = std::strlen(magic);
    std::vector<char> buf(n);
    is.read(buf.data(), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n) ||
        std::memcmp(buf.data(), magic, n) != 0)
        throw HeaderError(std::string(what) + ": bad magic bytes");
}

inline std::string read_header_json(std::istream& is) {
    const std::uint64_t len = read_u64_le(is);
    if (len > (1ULL << 30)) throw HeaderError("header length implausible");
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(is.gcount()) != len)
        throw HeaderError("file ends inside JSON header");
    return s;
}

// Doubles and u32s are stored as their in-memory little-endian bytes; the
// supported targets are little-endian, so round-trips are bit-exact.
inline void write_f64_array(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void read_f64_array(std::istream& is, std::vector<double>& v,
                           std::size_t count, const char* what) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(is.gcount()) != count * sizeof(double))
        throw TruncatedError(std::string(what) + ": payload truncated");
}

inline void write_u32_array(std::ostream& os, const std::vector<std::uint32_t>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(std::uint32_t)));
}

inline void read_u32_array(std::istream& is, std::vector<std::uint32_t>& v,
                           std::size_t count, const char* what) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
    if (static_cast<std::size_t>(is.gcount()) != count * sizeof(std::uint32_t))
        throw TruncatedError(std::string(what) + ": payload truncated");
}

}  // namespace wlab::detail
