#include "ulra/random.hpp"

#include <cmath>

#include "ulra/errors.hpp"

namespace ulra {

namespace {

// splitmix64 finalizer (Stafford mix13)
inline std::uint64_t mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

std::uint64_t RandomSource::next_u64() noexcept {
    const std::uint64_t c = counter_++;
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (c + 1);
    z ^= mix(stream_ + 0x632be59bd9b4e019ULL);
    return mix(z);
}

double RandomSource::next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::next_open_unit() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::vector<double> gaussian_vector(RandomSource& rng, std::size_t d) {
    if (d == 0) throw ValidationError("gaussian_vector needs d >= 1");
    std::vector<double> out;
    out.reserve(d + 1);
    const double two_pi = 6.283185307179586476925286766559;
    while (out.size() < d) {
        const double u1 = rng.next_open_unit();
        const double u2 = rng.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out.push_back(r * std::cos(two_pi * u2));
        out.push_back(r * std::sin(two_pi * u2));
    }
    out.resize(d);
    return out;
}

}  // namespace ulra
