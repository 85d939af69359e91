#ifndef CHAINHEAT_RNG_HPP
#define CHAINHEAT_RNG_HPP

#include <cstdint>
#include <cmath>

namespace chainheat {

// Counter-free splitmix64 generator. Each trajectory gets its own stream
// keyed by (seed, trajectory_id), so ensemble results do not depend on
// scheduling or worker count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate nearby seeds
        next();
        next();
    }

    static Rng for_trajectory(std::uint64_t seed, std::uint64_t trajectory_id) {
        std::uint64_t s = seed;
        s ^= (trajectory_id + 1) * 0x9E3779B97F4A7C15ull;
        s ^= (s >> 27) * 0x94D049BB133111EBull;
        return Rng(s);
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform on [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller with cached second value
    double gaussian() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

} // namespace chainheat

#endif
