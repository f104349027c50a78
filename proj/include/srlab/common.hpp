#pragma once

#include <cstdint>
#include <random>

namespace srlab {

enum class Mode { Train, Eval };

using Rng = std::mt19937_64;

}  // namespace srlab
