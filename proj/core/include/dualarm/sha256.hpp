#ifndef DUALARM_SHA256_HPP
#define DUALARM_SHA256_HPP

#include <cstdint>
#include <string>

namespace dualarm {

/// SHA-256 of a byte string, lowercase hex. Used for run-manifest digests.
std::string sha256_hex(const std::string& data);

/// SHA-256 of a file's contents. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace dualarm

#endif  // DUALARM_SHA256_HPP
