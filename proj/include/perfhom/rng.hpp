#pragma once

#include <cstdint>
#include <random>

namespace perfhom {

/// splitmix64 step (Steele, Lea, Vigna). Used to turn counter coordinates into
/// well-mixed generator keys.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Key for the stream addressed by (master_seed, path, noise, step). Every draw
/// in the artifact is a pure function of these coordinates, so identical inputs
/// reproduce identical outputs and distinct coordinates give independent streams.
inline std::uint64_t derive_stream_key(std::uint64_t master_seed, std::uint64_t path_id,
                                       std::uint64_t noise_id, std::uint64_t step_index) {
    std::uint64_t s = master_seed;
    splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ULL * (path_id + 1);
    splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ULL * (noise_id + 1);
    splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ULL * (step_index + 1);
    return splitmix64(s);
}

/// Standard normal pairs via Box-Muller on mt19937_64 output. The uniform is
/// ((x >> 11) + 0.5) * 2^-53, strictly inside (0,1), so the log never sees zero.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t key) : gen_(key) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

private:
    double uniform01() {
        const std::uint64_t x = gen_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Identifier recorded in run manifests so other implementations can match the
/// stream byte for byte.
inline const char* rng_algorithm_id() { return "splitmix64-key/mt19937_64/box-muller"; }

}  // namespace perfhom
