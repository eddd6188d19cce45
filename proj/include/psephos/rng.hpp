#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace psephos {

// Counter-based random stream. A stream is keyed by the run seed plus an
// arbitrary list of tags (agent id, stage, attempt, ...), so any consumer can
// derive its own independent stream and the output never depends on the order
// in which other streams are consumed. That is what makes sampling
// parallelism-invariant: thread scheduling cannot change what any one agent
// draws.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z);
    static std::uint64_t hash_str(std::string_view s);

    // Builds a stream key by folding tags into the seed.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    // Uniform in (0, 1), never returns an exact endpoint.
    double uniform_open();
    // Uniform integer in [0, n), unbiased. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    // Normal draw via the inverse-CDF transform on one uniform_open() value.
    // The quantile function is a fixed rational approximation, so a given
    // stream position always maps to the same deviate.
    double normal(double mu, double sigma);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Standard normal quantile (Acklam's approximation, |rel err| < 1.2e-9).
double inverse_normal_cdf(double p);

}  // namespace psephos
