#pragma once

namespace statact {

inline constexpr const char* kVersion = "0.1.0";

}
