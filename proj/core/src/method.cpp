#include "pinnuq/method.hpp"

#include "pinnuq/error.hpp"

namespace pinnuq {

std::string_view to_string(UqMethod method) noexcept {
  switch (method) {
    case UqMethod::Hmc:
      return "hmc";
    case UqMethod::DeepEnsemble:
      return "de";
    case UqMethod::McDropout:
      return "mcd";
  }
  return "unknown";
}

UqMethod parse_method(std::string_view text) {
  if (text == "hmc") return UqMethod::Hmc;
  if (text == "de") return UqMethod::DeepEnsemble;
  if (text == "mcd") return UqMethod::McDropout;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected hmc, de or mcd)");
}

}  // namespace pinnuq
