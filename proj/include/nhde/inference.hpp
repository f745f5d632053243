#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nhde/hga.hpp"
#include "nhde/mpo.hpp"
#include "nhde/pareto.hpp"
#include "nhde/problems.hpp"
#include "nhde/scalarization.hpp"
#include "nhde/training.hpp"

namespace nhde {

struct SolveConfig {
    MpoConfig mpo;
    AugmentMode augment = AugmentMode::None;
    RolloutMode mode = RolloutMode::Greedy;
    int starts = 0; // 0 = n
    Ablation ablation;
    std::uint64_t seed = 1;
};

struct TraceRow {
    std::size_t step = 0;
    double hv = 0.0;
    std::size_t archive_size = 0;
    std::size_t candidates = 0;
    std::uint64_t comparisons = 0;
};

struct SolveResult {
    ParetoArchive archive;
    std::vector<TraceRow> trace;
    std::vector<ObjectiveVector> generated; // every candidate objective vector, in order
    double time_ms = 0.0;
};

// Model used for subproblem i: the shared hypernetwork model, or the i-th
// fine-tuned submodel.
using ModelSelector = std::function<Model const&(std::size_t)>;

SolveResult solve_sequence(ModelSelector const& models, Instance const& inst, PreferenceSchedule const& schedule,
                           SolveConfig const& cfg, ReferenceBox const& box);
SolveResult solve_sequence(Model const& model, Instance const& inst, PreferenceSchedule const& schedule,
                           SolveConfig const& cfg, ReferenceBox const& box);
SolveResult solve_sequence(std::vector<Model> const& submodels, Instance const& inst,
                           PreferenceSchedule const& schedule, SolveConfig const& cfg, ReferenceBox const& box);

struct Metrics {
    double hv = 0.0;
    std::size_t nds = 0;
};

// Normalized HV with points beyond the reference point clipped; a point beyond
// the ideal point is a box violation and raises ParetoError.
Metrics metrics(ParetoArchive const& archive, ReferenceBox const& box);
Metrics metrics(std::span<ObjectiveVector const> points, ReferenceBox const& box);

// Generated vectors that exactly repeat an earlier one.
std::size_t duplicates_count(std::span<ObjectiveVector const> generated);

} // namespace nhde
