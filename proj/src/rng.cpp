#include "stepforge/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "stepforge/model.hpp"

namespace stepforge {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InputError("Rng::below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t u = eng_();
        if (u < limit) return u % n;
    }
}

double Rng::uniform() {
    // 53 random bits, shifted off zero.
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

}  // namespace stepforge
