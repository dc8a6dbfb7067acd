#pragma once

#include <string>
#include <string_view>

namespace pinnuq {

enum class UqMethod { Hmc, DeepEnsemble, McDropout };

std::string_view to_string(UqMethod method) noexcept;
/// Accepts "hmc", "de", "mcd"; throws ConfigError otherwise.
UqMethod parse_method(std::string_view text);

}  // namespace pinnuq
