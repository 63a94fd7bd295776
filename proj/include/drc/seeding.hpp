#pragma once

#include <cstdint>

namespace drc {

// Deterministic seed splitting for parallel stochastic work.  Realization k of
// a run with master seed s uses split_seed(s, k): the splitmix64 finalizer
// applied to s + (k+1) * golden-gamma.  Distinct (s, k) pairs give
// well-decorrelated 64-bit seeds, and the mapping is part of the on-disk
// reproducibility contract: the same master seed always expands to the same
// per-realization seeds no matter how many workers run them.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace drc
