#pragma once

#include <cstdint>
#include <random>

namespace plroute {

/// Every stochastic routine draws from a Mersenne Twister seeded through
/// std::seed_seq from (seed, stream). Distinct streams give independent
/// sequences, so per-chain or per-observation generators stay reproducible
/// regardless of evaluation order.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Mixes (seed, stream) into a new 64-bit seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace plroute
