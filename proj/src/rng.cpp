#include "nhde/rng.hpp"

#include <cmath>

namespace nhde {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t root, std::string_view name, std::uint64_t index)
{
    // FNV-1a over the stream name, mixed with the root seed and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return Rng(splitmix64(splitmix64(root ^ h) + index));
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound <= 1) { return 0; }
    // Rejection sampling removes modulo bias.
    std::uint64_t const limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = engine_();
    while (x >= limit) { x = engine_(); }
    return x % bound;
}

std::vector<double> Rng::simplex(std::size_t dim)
{
    std::vector<double> out(dim);
    double total = 0.0;
    for (auto& v : out) {
        v = -std::log(1.0 - uniform());
        total += v;
    }
    for (auto& v : out) { v /= total; }
    return out;
}

} // namespace nhde
