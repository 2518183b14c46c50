#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace ulra {

// Counter-based splittable generator: each output is a hash of
// (seed, stream, counter), so the sequence for a given (seed, stream-id) is
// identical on all platforms and independent of scheduling. Distinct
// stream-ids give statistically independent streams.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    // Fresh source on another stream of the same seed, counter reset.
    RandomSource stream(std::uint64_t stream_id) const noexcept {
        return RandomSource(seed_, stream_id);
    }

    std::uint64_t next_u64() noexcept;
    double next_unit() noexcept;       // uniform in [0, 1)
    double next_open_unit() noexcept;  // uniform in (0, 1]

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

// d i.i.d. standard normal samples via Box-Muller on consecutive uniform
// pairs. Each call generates ceil(d/2) pairs and drops the spare half sample
// when d is odd, so outputs depend only on the source state at entry.
std::vector<double> gaussian_vector(RandomSource& rng, std::size_t d);

}  // namespace ulra
