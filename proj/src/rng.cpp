#include "sfs/rng.hpp"

#include <cmath>
#include <numbers>

namespace sfs {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    std::uint64_t const p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// 53 random bits mapped to (0, 1] so that log(u) is always finite.
inline double to_unit_interval(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key)
{
    for (int round = 0; round < 10; ++round)
    {
        if (round > 0)
        {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t run_index)
{
    return splitmix64_mix(master_seed ^ splitmix64_mix(run_index));
}

CounterStream::CounterStream(std::uint64_t seed, StreamTag tag, std::uint32_t step)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , step_(step)
    , tag_(static_cast<std::uint32_t>(tag))
{
}

void CounterStream::refill()
{
    Philox4x32::Counter const ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32), step_, tag_};
    auto const out = Philox4x32::generate(ctr, key_);
    ++block_;
    bits_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    bits_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
}

double CounterStream::uniform()
{
    if (bits_left_ == 0)
    {
        refill();
        bits_left_ = 2;
    }
    return to_unit_interval(bits_[2 - bits_left_--]);
}

double CounterStream::gaussian()
{
    if (normals_left_ == 0)
    {
        refill();
        double const radius = std::sqrt(-2.0 * std::log(to_unit_interval(bits_[0])));
        double const angle = 2.0 * std::numbers::pi * to_unit_interval(bits_[1]);
        normals_ = {radius * std::cos(angle), radius * std::sin(angle)};
        normals_left_ = 2;
    }
    return normals_[2 - normals_left_--];
}

void CounterStream::fill_gaussian(std::span<double> out)
{
    for (double& z : out)
    {
        z = gaussian();
    }
}

}  // namespace sfs
