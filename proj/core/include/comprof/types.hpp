#pragma once

#include <cstdint>

namespace comprof {

using UserId = std::uint32_t;
using DocId = std::uint32_t;
using WordId = std::uint32_t;
using EdgeId = std::uint32_t;
using Bucket = std::int32_t;

}  // namespace comprof
