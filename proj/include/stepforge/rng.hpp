#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace stepforge {

/// 64-bit Mersenne Twister with hand-rolled distributions, so streams are
/// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    /// Uniform in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);
    /// Uniform in (0, 1).
    double uniform();
    double normal();
    double exponential(double rate);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace stepforge
