#pragma once

#include <string_view>

namespace egoemg {

/// Library version, e.g. "0.3.0".
std::string_view library_version();

}  // namespace egoemg
