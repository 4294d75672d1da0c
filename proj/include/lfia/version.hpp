#pragma once

namespace lfia {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lfia
