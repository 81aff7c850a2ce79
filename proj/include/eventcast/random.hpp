#pragma once

#include <random>

namespace eventcast {

using Rng = std::mt19937_64;

} // namespace eventcast
