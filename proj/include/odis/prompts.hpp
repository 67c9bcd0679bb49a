#pragma once

#include <string>

#include "odis/types.hpp"

namespace odis {

// Scoring prompt template for a registry dimension; contains a single
// `{text}` slot. Throws on unknown dimension names.
const std::string& prompt_template(const std::string& dimension_name);

// Substitutes the document text into the `{text}` slot in a single pass;
// braces inside the document are never re-expanded. Requires non-empty text.
std::string render_prompt(const Document& doc, const DimensionSpec& dim);

}  // namespace odis
