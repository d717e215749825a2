#pragma once

namespace tempo_conformal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tempo_conformal
