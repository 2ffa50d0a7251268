#pragma once

// Counter-based random streams.
//
// Philox4x32-10 keyed by the 64-bit experiment seed; the upper half of the
// 128-bit counter carries a stream label, so every (seed, label) pair is an
// independent, reproducible substream. Signal and noise of an instance are
// drawn from different labels.

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace spca {

class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        if (pos_ == 4) {
            buf_ = block(ctr_, key_);
            if (++ctr_[0] == 0) ++ctr_[1];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01()
    {
        const std::uint64_t hi = (*this)();
        const std::uint64_t lo = (*this)();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    /// The ten-round bijection itself.
    static counter_type block(counter_type ctr, key_type key)
    {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    key_type key_;
    counter_type ctr_;
    counter_type buf_{};
    int pos_ = 4;
};

/// Stream labels. Changing one component's parameters never shifts another's draws.
enum class Stream : std::uint64_t {
    signal = 1,
    noise = 2,
    dense_factor = 3,
    potential_mc = 4,
    oracle = 5,
};

inline Philox4x32 make_stream(std::uint64_t seed, Stream label)
{
    return Philox4x32(seed, static_cast<std::uint64_t>(label));
}

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed of replicate `replicate` at grid point `grid_index`:
/// mix64(mix64(mix64(base) ^ grid_index) ^ replicate).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t grid_index, std::uint64_t replicate)
{
    return mix64(mix64(mix64(base) ^ grid_index) ^ replicate);
}

/// Standard normal draws (ziggurat) from a Philox stream.
class NormalSampler {
public:
    explicit NormalSampler(Philox4x32 eng) : eng_(eng) {}
    double operator()() { return dist_(eng_); }

private:
    Philox4x32 eng_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

} // namespace spca
