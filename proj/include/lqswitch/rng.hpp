#pragma once

#include <cstdint>

namespace lqswitch {

/// splitmix64 finalizer. Cheap, well-distributed mix used to derive
/// independent seed streams from a root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic sub-seed for stream index `stream` under `root`.
/// Parallel Monte-Carlo seeds every path with derived_seed(root, path), so
/// results do not depend on the thread count.
inline std::uint64_t derived_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root ^ splitmix64(stream + 0x9d2c5680ULL));
}

} // namespace lqswitch
