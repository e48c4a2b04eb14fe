#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace newsrec {

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Lower-case 16 character hex rendering of fnv1a64.
std::string fnv1a64_hex(std::string_view bytes);

// Mixes several integers into one seed (splitmix64 finalizer chain).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace newsrec
