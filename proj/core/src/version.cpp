#include "egoemg/version.hpp"

namespace egoemg {

std::string_view library_version() { return EGOEMG_VERSION_STRING; }

}  // namespace egoemg
