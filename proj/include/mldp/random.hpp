#pragma once

// Counter-based random streams (Philox4x32-10). Every variate is a pure
// function of (key, counter), so sample i of a Monte Carlo run can be
// generated by any worker without coordination.

#include <array>
#include <cstdint>
#include <span>

namespace mldp {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Independent 64-bit seed for stream `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint32_t domain = 0);

/// Fills out with iid N(0, variance) variates; element j depends only on
/// (seed, j).
void fill_normal(std::uint64_t seed, double variance, std::span<double> out);

/// Standard normal quantile Φ^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

/// iid uniforms on (0, 1), element j depends only on (seed, j).
void fill_uniform(std::uint64_t seed, std::span<double> out);

}  // namespace mldp
