#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sfs {

//! Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
//!
//! Maps a 128-bit counter and a 64-bit key to 128 pseudorandom bits. No
//! state is carried between calls, which is what makes every draw in the
//! samplers addressable by index.
struct Philox4x32
{
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key);
};

//! SplitMix64 finalizer; used for seed derivation only.
std::uint64_t splitmix64_mix(std::uint64_t z);

//! Seed of run `run_index` inside a batch started from `master_seed`.
std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t run_index);

//! Purposes that get disjoint counter spaces under the same seed.
enum class StreamTag : std::uint32_t
{
    sampler = 0,      //!< SFS/Langevin per-step noise
    initial_point = 1,
    oracle = 2,
    projections = 3,
    test = 4,
};

/*!
 * Sequential view on one Philox substream.
 *
 * A substream is identified by (seed, tag, step). The counter words are
 * {block_lo, block_hi, step, tag} and the key is the 64-bit seed. Block b
 * yields two 53-bit uniforms, in (0, 1], which are turned into two standard
 * normals by Box-Muller:
 *
 *   z0 = sqrt(-2 log u0) cos(2 pi u1),  z1 = sqrt(-2 log u0) sin(2 pi u1)
 *
 * so normal number i of the substream comes from block i / 2. A stream is
 * used either for uniforms or for normals, never both.
 */
class CounterStream
{
  public:
    CounterStream(std::uint64_t seed, StreamTag tag, std::uint32_t step = 0);

    //! Uniform on (0, 1]; consumes half a block.
    double uniform();
    //! Standard normal; consumes half a block.
    double gaussian();
    void fill_gaussian(std::span<double> out);

    std::uint64_t blocks_used() const { return block_; }

  private:
    void refill();

    Philox4x32::Key key_;
    std::uint32_t step_;
    std::uint32_t tag_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> bits_{};
    std::array<double, 2> normals_{};
    int bits_left_ = 0;
    int normals_left_ = 0;
};

}  // namespace sfs
