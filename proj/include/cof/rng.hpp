#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cof {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard, but the std distributions are not; the draw algorithms here are
// fixed so that a seed reproduces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [lo, hi] via rejection sampling.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) {
            return static_cast<std::int64_t>(engine_());  // full 64-bit range
        }
        const std::uint64_t limit = (UINT64_MAX / span) * span;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return lo + static_cast<std::int64_t>(x % span);
    }

    // Box-Muller; caches the second variate.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * radius * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // First n of a shuffled index range; order is part of the draw.
    std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n) {
        std::vector<std::size_t> idx(population);
        for (std::size_t i = 0; i < population; ++i) {
            idx[i] = i;
        }
        shuffle(idx);
        if (n < idx.size()) {
            idx.resize(n);
        }
        return idx;
    }

    // Independent substream for a labelled purpose.
    Rng fork(std::uint64_t stream) {
        return Rng(engine_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cof
