#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clustop::utf8 {

/// Byte offset of every code point in `text`, followed by `text.size()`.
/// Throws FormatError on malformed UTF-8.
std::vector<std::size_t> code_point_offsets(std::string_view text);

/// Decodes `text` into code points. Throws FormatError on malformed UTF-8.
std::vector<char32_t> decode(std::string_view text);

bool is_space(char32_t cp);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace clustop::utf8
