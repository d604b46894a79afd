#pragma once
// Little-endian binary primitives, atomic file replacement, and the CSV
// number format shared by all emitters (6 significant digits).

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace kolmo {

static_assert(std::endian::native == std::endian::little,
              "serialized formats are little-endian; byte swapping is not implemented");

struct SerializationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is, const char* what) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw SerializationError(std::string("truncated input while reading ") + what);
    return v;
}

void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is, const char* what);

// Writes content to path via a temporary file in the same directory followed
// by a rename, so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// %.6g formatting used by every CSV column.
std::string csv_number(double v);

} // namespace kolmo
