#include "nhde/scalarization.hpp"

#include <cmath>
#include <functional>

#include "nhde/rng.hpp"

namespace nhde {

double ws_scalarize(std::span<double const> f, std::span<double const> lambda)
{
    if (f.size() != lambda.size()) { throw ScalarizationError("weight/objective dimension mismatch"); }
    double total = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m) { total += lambda[m] * f[m]; }
    return total;
}

void validate_weight(std::span<double const> lambda)
{
    double total = 0.0;
    for (double v : lambda) {
        if (!(v >= 0.0)) { throw ScalarizationError("weight components must be nonnegative"); }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) { throw ScalarizationError("weight components must sum to 1"); }
}

std::vector<Weight> uniform_weight_set(int M, int H)
{
    if (M < 1) { throw ScalarizationError("objective count must be positive"); }
    if (H < 1) { throw ScalarizationError("granularity must be at least 1"); }
    std::vector<Weight> out;
    std::vector<int> counts(M, 0);
    // Enumerate compositions of H into M parts, first component descending.
    std::function<void(int, int)> rec = [&](int m, int left) {
        if (m == M - 1) {
            counts[m] = left;
            Weight w(M);
            for (int i = 0; i < M; ++i) { w[i] = static_cast<double>(counts[i]) / H; }
            out.push_back(std::move(w));
            return;
        }
        for (int k = left; k >= 0; --k) {
            counts[m] = k;
            rec(m + 1, left - k);
        }
    };
    rec(0, H);
    return out;
}

std::vector<Weight> uniform_weight_set_of_size(int M, int N)
{
    if (M < 1 || N < 1) { throw ScalarizationError("objective count and set size must be positive"); }
    if (N == 1) { return {Weight(static_cast<std::size_t>(M), 1.0 / M)}; }
    for (int H = 1;; ++H) {
        // C(H+M-1, M-1) grows monotonically in H.
        double count = 1.0;
        for (int k = 1; k < M; ++k) { count = count * (H + k) / k; }
        if (std::llround(count) == N) { return uniform_weight_set(M, H); }
        if (count > N) { throw ScalarizationError("no simplex lattice has exactly " + std::to_string(N) + " weights"); }
    }
}

std::vector<DiversityFactor> diversity_schedule(int N)
{
    if (N < 2) { throw ScalarizationError("diversity schedule needs at least 2 subproblems"); }
    std::vector<DiversityFactor> out(N);
    for (int i = 1; i <= N; ++i) {
        double const second = static_cast<double>(i - 1) / (N - 1);
        out[i - 1] = {1.0 - second, second};
    }
    return out;
}

Preference sample_training_preference(Rng& rng, int M)
{
    Preference p;
    p.lambda = rng.simplex(static_cast<std::size_t>(M));
    double const second = rng.uniform();
    p.w = {1.0 - second, second};
    return p;
}

Preference sample_training_preference(std::uint64_t seed, int M)
{
    Rng rng = Rng::stream(seed, "weights");
    return sample_training_preference(rng, M);
}

std::vector<Weight> scale_weights(std::vector<Weight> weights, std::span<double const> scale)
{
    for (auto& w : weights) {
        if (w.size() != scale.size()) { throw ScalarizationError("scale vector dimension mismatch"); }
        double total = 0.0;
        for (std::size_t m = 0; m < w.size(); ++m) {
            if (!(scale[m] >= 0.0)) { throw ScalarizationError("scale entries must be nonnegative"); }
            w[m] *= scale[m];
            total += w[m];
        }
        if (total <= 0.0) { throw ScalarizationError("scaled weight collapsed to zero"); }
        for (auto& v : w) { v /= total; }
    }
    return weights;
}

PreferenceSchedule make_schedule(std::vector<Weight> weights, std::uint64_t shuffle_seed, bool shuffle)
{
    PreferenceSchedule s;
    s.shuffle_seed = shuffle_seed;
    if (shuffle) {
        Rng rng = Rng::stream(shuffle_seed, "schedule");
        rng.shuffle(weights);
    }
    std::vector<DiversityFactor> factors;
    if (weights.size() >= 2) {
        factors = diversity_schedule(static_cast<int>(weights.size()));
    } else {
        factors.assign(weights.size(), DiversityFactor{1.0, 0.0});
    }
    for (std::size_t i = 0; i < weights.size(); ++i) { s.items.push_back({std::move(weights[i]), factors[i]}); }
    return s;
}

} // namespace nhde
