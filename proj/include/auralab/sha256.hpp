#pragma once

#include <cstdint>
#include <string>

namespace auralab {

// Hex digest of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

} // namespace auralab
