#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace ml {

/// Deterministic seeded generator (splitmix64 core). Same seed gives the same
/// draw sequence on every platform; no OS entropy is used anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();
    double normal(double mean, double sd);

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

    /// Independent stream derived from this seed and a salt. Used to give
    /// ensemble members their own generators so parallel training stays
    /// reproducible.
    Rng derive(std::uint64_t salt) const;

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ml
