#pragma once

#include <cstdint>
#include <vector>

namespace kidc::num {

// Deterministic generator with hand-rolled distributions. std::*_distribution
// output differs between standard libraries, so the draws are produced from
// raw mt19937_64 bits to keep seeded runs reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    // Independent stream for (seed, stream_id); used to give each fold,
    // each purpose (init / shuffle / dropout) its own sequence.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // [0, 1)
    double uniform();
    // [lo, hi)
    double uniform(double lo, double hi);
    // standard normal via Box-Muller
    double normal();
    double normal(double mean, double stddev);
    // [0, n)
    std::size_t index(std::size_t n);

    bool bernoulli(double p_true);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = index(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace kidc::num
