#ifndef REMLKIT_RNG_HPP
#define REMLKIT_RNG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace remlkit {

// Counter-based stream: output_k = mix(key + k * gamma) with the splitmix64
// finalizer. Streams keyed by (seed, stream) are order-independent, so
// replicates can be drawn in any order (or in parallel) with identical
// results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed) ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    // uniform in (0, 1]
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_uniform()));
        const double a = 2.0 * std::numbers::pi * next_uniform();
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd normal_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = next_normal();
        return v;
    }

    double uniform_in(double a, double b) { return a + (b - a) * next_uniform(); }

    // integer in [a, b] inclusive
    std::int64_t int_in(std::int64_t a, std::int64_t b) {
        const auto span = static_cast<std::uint64_t>(b - a + 1);
        return a + static_cast<std::int64_t>(next_u64() % span);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace remlkit

#endif
