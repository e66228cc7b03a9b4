#pragma once

namespace dipnut {

inline constexpr const char* kVersion = "0.1.0";

}
