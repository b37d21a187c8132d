#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace reverger {

inline constexpr std::size_t kMaxLabelLength = 64;

// Returns a description of why `label` is not a valid direction label, or
// nothing if it is. Labels are non-empty, at most 64 scalar values, valid
// UTF-8 and free of line breaks.
std::optional<std::string> label_problem(std::string_view label);

}  // namespace reverger
