#pragma once

namespace pcatdyn {
inline constexpr const char* pcatdyn_version = "0.1.0";
}
