#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace kgsc {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;

/// FNV-1a over raw bytes; used for input digests and parameter checksums.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = kFnvOffsetBasis) noexcept;

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t basis = kFnvOffsetBasis) noexcept {
  return fnv1a64(s.data(), s.size(), basis);
}

/// Digest of a whole file, streamed. Throws IoError if unreadable.
std::uint64_t file_digest(const std::filesystem::path& path);

std::string to_hex(std::uint64_t value);

}  // namespace kgsc
