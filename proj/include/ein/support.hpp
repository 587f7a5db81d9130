#pragma once

#include <cstdint>

#include <boost/dynamic_bitset.hpp>

namespace ein {

// Bit i set iff the pattern occurs in training graph i.
using Support = boost::dynamic_bitset<std::uint64_t>;

}  // namespace ein
