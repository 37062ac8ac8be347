#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace coldrec {

/// Deterministic random stream. mt19937_64 supplies the raw 64-bit words (its
/// output sequence is pinned by the standard); the uniform and normal mappings
/// are written out here so results are identical on every platform, which the
/// std::*_distribution classes do not guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1), never exactly 0 or 1.
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    /// Standard normal via Box-Muller; consumes two words per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// k distinct elements of `pool`, ascending; partial Fisher-Yates.
    std::vector<int> sample_subset(const std::vector<int>& pool, int k) {
        std::vector<int> scratch = pool;
        const auto n = scratch.size();
        for (int i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::size_t>(below(n - static_cast<std::size_t>(i)));
            std::swap(scratch[static_cast<std::size_t>(i)], scratch[j]);
        }
        std::vector<int> out(scratch.begin(), scratch.begin() + k);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 step, used for seed mixing only.
inline std::uint64_t mix_u64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-stream seed derived from a base seed and a tag path.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mix_u64(base);
    for (std::uint64_t t : tags) s = mix_u64(s ^ mix_u64(t));
    return s;
}

}  // namespace coldrec
