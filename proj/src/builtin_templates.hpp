#pragma once

#include "reverger/prompts.hpp"

#include <string_view>

namespace reverger::detail {

// Defined in the generated builtin_templates.cpp.
std::string_view builtin_template_text(PromptKind kind) noexcept;

}  // namespace reverger::detail
