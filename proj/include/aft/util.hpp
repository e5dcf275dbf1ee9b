#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aft {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document (JSON syntax, bad field types, grammar errors).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid document with a dangling cross-reference.
class ReferenceError : public Error {
public:
    using Error::Error;
};

namespace util {

// 64-bit FNV-1a. Used as stable key material for decision keys and patch
// keys, so the constants and the hex rendering are part of the file formats.
std::uint64_t fnv1a64(std::string_view data);

// Lowercase hex, zero-padded to 16 digits.
std::string fnv1a64_hex(std::string_view data);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

// Bumps a trailing integer ("v1" -> "v2", "2.3" -> "2.4"); appends ".2"
// when the version carries no trailing number.
std::string bump_version(const std::string& version);

// Maps a raw mt19937_64 draw onto [0, 1). Written out explicitly so the
// value stream does not depend on the standard library's distribution
// implementation.
double u01(std::uint64_t raw);

// Rounds to 6 decimal places. Scores are rounded before they are stored in
// event details so the serialized form (and its hash) stays compact.
double round6(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Lowercase letters/digits, everything else squeezed to single '_'.
std::string slugify(std::string_view s);

} // namespace util
} // namespace aft
