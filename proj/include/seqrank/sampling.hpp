#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "seqrank/corpus_io.hpp"
#include "seqrank/error.hpp"

namespace seqrank {

/// SplitMix64 (Steele, Lea, Flood). Pinned so samples are reproducible across platforms
/// and standard-library versions.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) noexcept : m_state(seed) {}

    std::uint64_t next() noexcept
    {
        std::uint64_t z = (m_state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound) by rejection of the biased low range.
    std::uint64_t below(std::uint64_t bound)
    {
        if (bound == 0) {
            throw Error("SplitMix64::below: bound must be > 0");
        }
        const std::uint64_t threshold = (0 - bound) % bound;
        while (true) {
            std::uint64_t r = next();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

  private:
    std::uint64_t m_state;
};

/// Picks `count` distinct positions of [0, n) with a forward partial Fisher-Yates shuffle,
/// returned in ascending order.
inline std::vector<std::size_t> sample_positions(std::size_t n, std::size_t count, SplitMix64& rng)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(count);
    std::sort(perm.begin(), perm.end());
    return perm;
}

/// Class-balanced sampling without replacement: `n_pos` positives then `n_neg` negatives, each
/// group in pool order. One SplitMix64 stream seeded with `seed` draws positives first.
inline std::vector<TrainInstance> sample_balanced(const std::vector<TrainInstance>& pool, std::size_t n_pos,
                                                  std::size_t n_neg, std::uint64_t seed)
{
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        (pool[i].label == TrainInstance::Label::positive ? pos : neg).push_back(i);
    }
    if (pos.size() < n_pos) {
        throw Error("insufficient positive instances: requested " + std::to_string(n_pos) + ", pool has " +
                    std::to_string(pos.size()));
    }
    if (neg.size() < n_neg) {
        throw Error("insufficient negative instances: requested " + std::to_string(n_neg) + ", pool has " +
                    std::to_string(neg.size()));
    }
    SplitMix64 rng(seed);
    std::vector<TrainInstance> out;
    out.reserve(n_pos + n_neg);
    for (auto i : sample_positions(pos.size(), n_pos, rng)) {
        out.push_back(pool[pos[i]]);
    }
    for (auto i : sample_positions(neg.size(), n_neg, rng)) {
        out.push_back(pool[neg[i]]);
    }
    return out;
}

} // namespace seqrank
