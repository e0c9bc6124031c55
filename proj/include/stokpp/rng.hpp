#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace stokpp {

// Philox4x32-10 (Salmon et al., SC 2011). A keyed bijection of a 128-bit
// counter; every draw in the simulator is addressed by its coordinates
// instead of by position in a sequential stream, so draws do not depend on
// how replicates are scheduled.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = std::uint64_t{kMulA} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMulB} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

// Uniform in the open interval (0, 1) from 64 random bits (52 significant,
// so the largest value 1 - 2^-53 is representable and never rounds to 1).
inline double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// UniformRandomBitGenerator over the Philox blocks of one counter prefix,
/// so standard-library distributions can consume as many draws as their
/// rejection loops need without disturbing any other (step, cell) address.
class CellEngine {
public:
    using result_type = std::uint32_t;

    CellEngine(Philox4x32::Counter base, Philox4x32::Key key) noexcept : base_(base), key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return 0xFFFFFFFFu; }

    result_type operator()() noexcept {
        if (used_ == 4) {
            auto ctr = base_;
            ctr[3] |= block_++;
            buffer_ = Philox4x32::generate(ctr, key_);
            used_ = 0;
        }
        return buffer_[used_++];
    }

private:
    Philox4x32::Counter base_;
    Philox4x32::Key key_;
    Philox4x32::Counter buffer_{};
    std::uint32_t block_ = 0;
    int used_ = 4;
};

/// Random draws addressed by (step, lattice cell) inside one
/// (master seed, replicate, stream) triple.
///
/// Counter layout: {cell or cell pair, step, replicate, stream << 24 | tag}.
/// Cells 2k and 2k+1 share one Philox block and are the Box-Muller pair of
/// that block, so a normal draw is the same no matter which sub-range is
/// filled.
class NoiseStream {
public:
    static constexpr std::uint32_t kMaxStream = 255;

    NoiseStream(std::uint64_t master_seed, std::uint32_t replicate, std::uint32_t stream)
        : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
          replicate_(replicate),
          stream_(stream) {
        if (stream > kMaxStream) throw std::invalid_argument("NoiseStream: stream id must be < 256");
    }

    std::uint64_t seed() const noexcept { return (std::uint64_t{key_[1]} << 32) | key_[0]; }
    std::uint32_t replicate() const noexcept { return replicate_; }
    std::uint32_t stream() const noexcept { return stream_; }

    double normal(std::uint64_t step, std::int64_t cell) const noexcept {
        const auto pair = pair_at(step, cell);
        return (cell & 1) ? pair[1] : pair[0];
    }

    // out[i] = normal(step, first_cell + i)
    void fill(std::uint64_t step, std::int64_t first_cell, std::span<double> out) const noexcept {
        std::size_t i = 0;
        std::int64_t cell = first_cell;
        if (!out.empty() && (cell & 1)) {
            out[i++] = pair_at(step, cell)[1];
            ++cell;
        }
        for (; i + 1 < out.size(); i += 2, cell += 2) {
            const auto pair = pair_at(step, cell);
            out[i] = pair[0];
            out[i + 1] = pair[1];
        }
        if (i < out.size()) out[i] = pair_at(step, cell)[0];
    }

    /// Engine private to one (step, cell); feeds Poisson/Gamma sampling.
    CellEngine engine(std::uint64_t step, std::int64_t cell) const noexcept {
        return CellEngine({static_cast<std::uint32_t>(static_cast<std::uint64_t>(cell)), static_cast<std::uint32_t>(step),
                           replicate_, (stream_ << 24) | kEngineTag},
                          key_);
    }

private:
    std::array<std::uint32_t, 4> block_of(std::uint64_t step, std::int64_t cell) const noexcept {
        const auto pair_index = static_cast<std::uint32_t>(static_cast<std::uint64_t>(cell >> 1));
        return Philox4x32::generate({pair_index, static_cast<std::uint32_t>(step), replicate_, stream_ << 24}, key_);
    }

    std::array<double, 2> pair_at(std::uint64_t step, std::int64_t cell) const noexcept {
        const auto block = block_of(step, cell);
        const double u1 = to_open_unit((std::uint64_t{block[0]} << 32) | block[1]);
        const double u2 = to_open_unit((std::uint64_t{block[2]} << 32) | block[3]);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    // Engine blocks use the low 23 bits as a block counter under this tag.
    static constexpr std::uint32_t kEngineTag = 0x800000u;

    Philox4x32::Key key_;
    std::uint32_t replicate_;
    std::uint32_t stream_;
};

} // namespace stokpp
