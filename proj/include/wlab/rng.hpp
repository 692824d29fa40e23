#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wlab/errors.hpp"

namespace wlab {

// Task labels for RandomStream::derive, kept distinct project-wide.
namespace rng_tasks {
constexpr std::uint64_t split = 1;
constexpr std::uint64_t init = 2;
constexpr std::uint64_t shuffle = 3;
constexpr std::uint64_t noise = 4;
constexpr std::uint64_t eval = 5;
constexpr std::uint64_t sweep = 6;
}  // namespace rng_tasks

// Seeded random stream with transforms implemented on top of the raw
// mt19937_64 output, so sequences are identical across standard libraries.
// State round-trips through a string for checkpointing.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; draws two uniforms per call and keeps
    // no cache, which keeps the stream state equal to the engine state
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // uniform integer in [0, bound), rejection-sampled
    std::uint64_t integer(std::uint64_t bound) {
        if (bound == 0) throw ValueError("RandomStream::integer: bound is 0");
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(integer(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent stream for a named sub-task of this seed.
    static RandomStream derive(std::uint64_t seed, std::uint64_t task,
                               std::uint64_t index = 0) {
        std::uint64_t h = seed;
        h ^= 0x9e3779b97f4a7c15ULL + task + (h << 6) + (h >> 2);
        h ^= 0x9e3779b97f4a7c15ULL + index + (h << 6) + (h >> 2);
        return RandomStream(h);
    }

    std::string state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
        if (is.fail()) throw ValueError("RandomStream::restore: bad state string");
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace wlab
