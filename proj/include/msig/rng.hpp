#pragma once

#include <cstdint>
#include <random>

namespace msig {

// Recorded in report metadata so runs can be reproduced exactly.
inline constexpr const char* kRngName = "mt19937_64+inverse-cdf-normal-AS241";

// One splitmix64 step; advances state and returns the next value.
std::uint64_t splitmix64(std::uint64_t& state);

// Seed of the generator for path `index` under master `seed`.
// Independent of path count and of scheduling, so parallel and sequential
// simulation produce identical output.
std::uint64_t path_substream_seed(std::uint64_t seed, std::uint64_t index);

// Inverse standard normal CDF (Wichura's PPND16), |error| < 1e-15 for p in (0,1).
double normal_quantile(double p);

// Deterministic N(0,1) stream: mt19937_64 -> uniform on (0,1) -> inverse CDF.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}
    double next();

private:
    std::mt19937_64 gen_;
};

}  // namespace msig
