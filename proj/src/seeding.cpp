#include "drc/seeding.hpp"

namespace drc {

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer (Steele, Lea & Flood) on master + (index+1)*gamma.
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace drc
