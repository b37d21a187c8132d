#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

// UTF-8 helpers. All user-visible offsets in this project count Unicode
// scalar values, never bytes.
namespace reverger::text {

[[nodiscard]] bool is_valid_utf8(std::string_view s) noexcept;

// Throws Error(InvalidEncoding) on malformed input or surrogate code points.
[[nodiscard]] std::u32string decode(std::string_view s);
[[nodiscard]] std::string encode(std::u32string_view s);

[[nodiscard]] std::size_t scalar_length(std::string_view s);

// Byte offset of the scalar at `index`; index == length yields s.size().
[[nodiscard]] std::size_t byte_offset(std::string_view s, std::size_t index);

// Substring [start, end) in scalar units.
[[nodiscard]] std::string slice(std::string_view s, std::size_t start, std::size_t end);

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

// Simple case folding for label comparison: ASCII and Latin-1 letters.
[[nodiscard]] std::string fold_case(std::string_view s);

// Whitespace-separated token count.
[[nodiscard]] std::size_t word_count(std::string_view s) noexcept;

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view s) noexcept;
[[nodiscard]] std::string hex_digest(std::string_view s);

}  // namespace reverger::text
