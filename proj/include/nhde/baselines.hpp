#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nhde/pareto.hpp"
#include "nhde/problems.hpp"
#include "nhde/scalarization.hpp"

namespace nhde {

class BaselineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KnapsackOptimum {
    double value = 0.0; // lambda . values, maximization sense
    Solution solution;
};

// Item weights and capacity are scaled by `resolution` and rounded to integers.
std::vector<long> discretize_weights(Instance const& inst, double resolution);
long discretize_capacity(Instance const& inst, double resolution);

KnapsackOptimum ws_dp_knapsack(Instance const& inst, Weight const& lambda, double resolution = 1000.0);

// Nearest neighbour under the lambda-scalarized edge length (routing) or
// descending scalarized value density (knapsack).
Solution greedy_ws_construct(Instance const& inst, Weight const& lambda, int start = 0);

struct LocalSearchStats {
    std::size_t explored = 0;
    std::size_t neighbours = 0;
};

// Single-archive Pareto local search: repeatedly expands an unexplored archive
// member with its 2-opt (routing) or swap-and-repair (knapsack) neighbourhood.
ParetoArchive pareto_local_search(Instance const& inst, std::vector<Solution> const& seeds, int iterations,
                                  std::uint64_t seed, LocalSearchStats* stats = nullptr,
                                  std::vector<double>* hv_trace = nullptr, ReferenceBox const* box = nullptr);

std::vector<Solution> two_opt_neighbours(Solution const& sol);
std::vector<Solution> knapsack_neighbours(Instance const& inst, Solution const& sol);

// Uniformly random feasible action at every construction step.
std::vector<Solution> random_policy(Instance const& inst, int count, std::uint64_t seed);

} // namespace nhde
