#pragma once

#include <cstdint>

namespace jmpgcf {

/// Dense 0-based index of a user, an item, or a node of the joined user/item graph.
using Index = std::uint32_t;

}  // namespace jmpgcf
