#pragma once

// Helpers shared by the unit tests: scratch directories and small generators.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <algorithm>
#include <string>
#include <vector>

namespace testsupport {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("stepforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    os << body;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

// Independent of the library RNG on purpose.
struct Gen {
    std::mt19937_64 eng;
    explicit Gen(std::uint64_t seed) : eng(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
    double normal(double mu = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mu, sd)(eng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
    bool coin(double p = 0.5) { return uniform() < p; }
    std::vector<double> normals(std::size_t n, double sd = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = normal(0.0, sd);
        return v;
    }
};

inline std::vector<double> sine(std::size_t n, double rate, double freq, double amp, double offset = 0.0,
                                double phase = 0.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = offset + amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate + phase);
    return v;
}

}  // namespace testsupport
