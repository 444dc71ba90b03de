#pragma once

#include <cstdint>

namespace aegis {

using Tick = std::int64_t;
using TaskId = std::uint32_t;

}  // namespace aegis
