#pragma once

namespace tubelink {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tubelink
