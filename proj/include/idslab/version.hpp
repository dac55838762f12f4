#pragma once

namespace idslab {

inline constexpr const char* version = "0.1.0";

}  // namespace idslab
