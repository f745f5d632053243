#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nhde/problems.hpp"
#include "nhde/rng.hpp"

namespace nhde {

class ScalarizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weight vector on the probability simplex.
using Weight = std::vector<double>;

// Trade-off between the scalarized objective (first) and the HV term (second).
struct DiversityFactor {
    double scalar = 1.0;
    double indicator = 0.0;
    friend bool operator==(DiversityFactor const&, DiversityFactor const&) = default;
};

struct Preference {
    Weight lambda;
    DiversityFactor w;
};

// Inference order: shuffled weights paired with the linear diversity schedule.
struct PreferenceSchedule {
    std::vector<Preference> items;
    std::uint64_t shuffle_seed = 0;
};

double ws_scalarize(std::span<double const> f, std::span<double const> lambda);

void validate_weight(std::span<double const> lambda);

// Simplex lattice {k/H : sum k = H}, count C(H+M-1, M-1).
std::vector<Weight> uniform_weight_set(int M, int H);
// Lattice with exactly N members; throws if no granularity H gives N.
std::vector<Weight> uniform_weight_set_of_size(int M, int N);

// w^i = ((N-i)/(N-1), (i-1)/(N-1)), i = 1..N.
std::vector<DiversityFactor> diversity_schedule(int N);

Preference sample_training_preference(Rng& rng, int M);
Preference sample_training_preference(std::uint64_t seed, int M);

// Element-wise rescaling of every weight followed by renormalization.
std::vector<Weight> scale_weights(std::vector<Weight> weights, std::span<double const> scale);

PreferenceSchedule make_schedule(std::vector<Weight> weights, std::uint64_t shuffle_seed, bool shuffle = true);

} // namespace nhde
