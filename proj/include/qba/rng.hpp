#pragma once

// Deterministic random streams. Every consumer gets its own engine derived
// from (seed, stream name, indices), so results never depend on which worker
// ran which task or in what order.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace qba {

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RngStream {
public:
    using engine_type = std::mt19937_64;

    RngStream(std::uint64_t seed, std::string_view name,
              std::initializer_list<std::uint64_t> indices = {}) {
        std::vector<std::uint32_t> words;
        auto push = [&words](std::uint64_t v) {
            words.push_back(static_cast<std::uint32_t>(v));
            words.push_back(static_cast<std::uint32_t>(v >> 32));
        };
        push(seed);
        push(fnv1a(name));
        for (auto i : indices) push(i);
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    // Uniform on the open interval (0, 1), 53 random bits. Keeping 0 out
    // makes bernoulli(p) exact for p that underflow to tiny values.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double sd) {
        std::normal_distribution<double> d(mean, sd);
        return d(engine_);
    }

    double gamma(double shape) {
        std::gamma_distribution<double> d(shape, 1.0);
        return d(engine_);
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    // Index uniformly distributed over [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(engine_);
    }

    // Category index drawn from (unnormalised) probabilities.
    std::size_t categorical(const std::vector<double>& probs) {
        double total = 0.0;
        for (double p : probs) total += p;
        double u = uniform() * total;
        for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
            if (u < probs[k]) return k;
            u -= probs[k];
        }
        return probs.size() - 1;
    }

    engine_type& engine() noexcept { return engine_; }

private:
    engine_type engine_;
};

namespace streams {
inline constexpr std::string_view generation = "generation";
inline constexpr std::string_view priors = "priors";
inline constexpr std::string_view imputation = "imputation";
inline constexpr std::string_view bootstrap = "bootstrap";
inline constexpr std::string_view oracle = "oracle";
}  // namespace streams

}  // namespace qba
