#pragma once

#include <cstdint>
#include <string>

namespace vdmforge {

// SHA-256 (FIPS 180-4), used for run-record content hashes.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace vdmforge
