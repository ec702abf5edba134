#pragma once

namespace tslr {
inline constexpr const char* kVersion = "0.1.0";
}
