#pragma once

#include "qwalk/core.hpp"
#include "qwalk/distribution.hpp"
#include "qwalk/walk.hpp"
#include "qwalk/classical.hpp"
#include "qwalk/spectral.hpp"
#include "qwalk/emulate.hpp"

namespace qwalk {
inline constexpr const char* kVersion = "0.1.0";
}
