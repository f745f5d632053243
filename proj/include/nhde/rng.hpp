#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nhde {

// Deterministic random source. Distributions are implemented here rather than
// through <random> distribution objects so that draws are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    // Independent sub-stream derived from a root seed and a stream name.
    static Rng stream(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    // Uniform integer in [lo, hi].
    int integer(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

    // Flat Dirichlet draw (uniform on the (dim-1)-simplex).
    std::vector<double> simplex(std::size_t dim);

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace nhde
