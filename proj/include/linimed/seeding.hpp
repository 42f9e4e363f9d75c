#pragma once

#include <cstdint>
#include <string_view>

namespace linimed {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t label_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of one run, a pure function of its coordinates in the experiment
/// grid, so results never depend on the order in which workers pick up jobs.
inline constexpr std::uint64_t run_seed(std::uint64_t base_seed, std::string_view policy_label,
                                        std::uint64_t alpha_index, std::uint64_t repeat) {
    std::uint64_t h = splitmix64(base_seed ^ label_hash(policy_label));
    h = splitmix64(h ^ (alpha_index * 0x2545f4914f6cdd1dULL));
    return splitmix64(h ^ (repeat + 0x632be59bd9b4e019ULL));
}

// Independent sub-streams of one run (environment vs. policy randomness).
inline constexpr std::uint64_t stream_seed(std::uint64_t run, std::uint64_t stream) {
    return splitmix64(run ^ splitmix64(stream + 1));
}

}  // namespace linimed
