#include "nhde/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "nhde/rng.hpp"

namespace nhde {

std::vector<long> discretize_weights(Instance const& inst, double resolution)
{
    std::vector<long> w;
    w.reserve(inst.weights.size());
    for (double x : inst.weights) { w.push_back(std::lround(x * resolution)); }
    return w;
}

long discretize_capacity(Instance const& inst, double resolution)
{
    return std::lround(inst.capacity * resolution);
}

KnapsackOptimum ws_dp_knapsack(Instance const& inst, Weight const& lambda, double resolution)
{
    if (inst.kind != ProblemKind::MOKP) { throw BaselineError("WS-DP needs a knapsack instance"); }
    validate_weight(lambda);
    if (lambda.size() != 2) { throw BaselineError("WS-DP needs a two-objective weight"); }
    long const cap = discretize_capacity(inst, resolution);
    if (cap <= 0) { throw BaselineError("resolution too coarse: capacity rounds to 0"); }
    auto const w = discretize_weights(inst, resolution);
    auto const n = static_cast<std::size_t>(inst.n);
    auto const C = static_cast<std::size_t>(cap);

    std::vector<double> best(C + 1, 0.0);
    std::vector<std::vector<bool>> take(n, std::vector<bool>(C + 1, false));
    for (std::size_t i = 0; i < n; ++i) {
        double const v = lambda[0] * inst.values[i][0] + lambda[1] * inst.values[i][1];
        auto const wi = static_cast<std::size_t>(std::max(0L, w[i]));
        for (std::size_t c = C + 1; c-- > wi;) {
            double const with = best[c - wi] + v;
            if (with > best[c]) {
                best[c] = with;
                take[i][c] = true;
            }
        }
    }
    KnapsackOptimum out;
    out.value = best[C];
    std::size_t c = C;
    for (std::size_t i = n; i-- > 0;) {
        if (take[i][c]) {
            out.solution.sequence.push_back(static_cast<int>(i));
            c -= static_cast<std::size_t>(std::max(0L, w[i]));
        }
    }
    std::reverse(out.solution.sequence.begin(), out.solution.sequence.end());
    return out;
}

namespace {

double scalar_distance(Instance const& inst, Weight const& lambda, int a, int b)
{
    double d = 0.0;
    for (int m = 0; m < inst.M; ++m) {
        auto const& p = inst.coords[a][m];
        auto const& q = inst.coords[b][m];
        d += lambda[m] * std::hypot(p.x - q.x, p.y - q.y);
    }
    return d;
}

} // namespace

Solution greedy_ws_construct(Instance const& inst, Weight const& lambda, int start)
{
    validate_weight(lambda);
    if (lambda.size() != static_cast<std::size_t>(inst.M)) { throw BaselineError("weight dimension mismatch"); }
    ConstructionState state(inst);
    auto const n = inst.n;
    switch (inst.kind) {
    case ProblemKind::MOTSP: {
        state.apply(start);
        while (!state.done()) {
            auto const mask = state.mask();
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (int a = 0; a < n; ++a) {
                if (mask[a]) { continue; }
                double const d = scalar_distance(inst, lambda, state.last(), a);
                if (d < best_d) {
                    best_d = d;
                    best = a;
                }
            }
            state.apply(best);
        }
        break;
    }
    case ProblemKind::MOCVRP: {
        while (!state.done()) {
            auto const mask = state.mask();
            Point2 const from = state.last() < 0 ? inst.depot : inst.coords[state.last()][0];
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (int a = 0; a < n; ++a) {
                if (mask[a]) { continue; }
                double const d = std::hypot(from.x - inst.coords[a][0].x, from.y - inst.coords[a][0].y);
                if (d < best_d) {
                    best_d = d;
                    best = a;
                }
            }
            state.apply(best);
        }
        break;
    }
    case ProblemKind::MOKP: {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        auto density = [&](int i) {
            return (lambda[0] * inst.values[i][0] + lambda[1] * inst.values[i][1]) / inst.weights[i];
        };
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return density(a) > density(b); });
        for (int i : order) {
            if (state.done()) { break; }
            if (state.feasible(i)) { state.apply(i); }
        }
        break;
    }
    }
    return state.solution();
}

std::vector<Solution> two_opt_neighbours(Solution const& sol)
{
    std::vector<Solution> out;
    auto const n = sol.sequence.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Solution s = sol;
            std::reverse(s.sequence.begin() + static_cast<std::ptrdiff_t>(i),
                         s.sequence.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

// Fills remaining capacity with the densest items under equal objective weights.
void greedy_repair(Instance const& inst, std::vector<bool>& chosen, double& load)
{
    std::vector<int> order(static_cast<std::size_t>(inst.n));
    std::iota(order.begin(), order.end(), 0);
    auto density = [&](int i) { return (inst.values[i][0] + inst.values[i][1]) / inst.weights[i]; };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return density(a) > density(b); });
    for (int i : order) {
        if (!chosen[i] && load + inst.weights[i] <= inst.capacity + 1e-9) {
            chosen[i] = true;
            load += inst.weights[i];
        }
    }
}

Solution from_mask(std::vector<bool> const& chosen)
{
    Solution s;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        if (chosen[i]) { s.sequence.push_back(static_cast<int>(i)); }
    }
    return s;
}

} // namespace

std::vector<Solution> knapsack_neighbours(Instance const& inst, Solution const& sol)
{
    auto const n = static_cast<std::size_t>(inst.n);
    std::vector<bool> base(n, false);
    double load = 0.0;
    for (int i : sol.sequence) {
        base[i] = true;
        load += inst.weights[i];
    }
    std::vector<Solution> out;
    for (std::size_t j = 0; j < n; ++j) {
        if (!base[j] && load + inst.weights[j] <= inst.capacity + 1e-9) {
            auto c = base;
            c[j] = true;
            out.push_back(from_mask(c));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!base[i]) { continue; }
        for (std::size_t j = 0; j < n; ++j) {
            if (base[j]) { continue; }
            double l = load - inst.weights[i] + inst.weights[j];
            if (l > inst.capacity + 1e-9) { continue; }
            auto c = base;
            c[i] = false;
            c[j] = true;
            greedy_repair(inst, c, l);
            out.push_back(from_mask(c));
        }
    }
    return out;
}

ParetoArchive pareto_local_search(Instance const& inst, std::vector<Solution> const& seeds, int iterations,
                                  std::uint64_t seed, LocalSearchStats* stats, std::vector<double>* hv_trace,
                                  ReferenceBox const* box)
{
    if (iterations < 0) { throw BaselineError("iteration budget must be non-negative"); }
    ParetoArchive archive;
    for (auto const& s : seeds) { archive.insert(evaluate(inst, s), s); }
    Rng rng = Rng::stream(seed, "local-search");
    std::set<std::vector<int>> explored;
    LocalSearchStats local;
    for (int it = 0; it < iterations; ++it) {
        std::vector<std::size_t> open;
        for (std::size_t k = 0; k < archive.entries().size(); ++k) {
            if (!explored.contains(archive.entries()[k].solution.sequence)) { open.push_back(k); }
        }
        if (open.empty()) { break; }
        Solution const current = archive.entries()[open[rng.below(open.size())]].solution;
        explored.insert(current.sequence);
        ++local.explored;
        auto neighbours = inst.kind == ProblemKind::MOKP ? knapsack_neighbours(inst, current) : two_opt_neighbours(current);
        for (auto& nb : neighbours) {
            ++local.neighbours;
            auto f = evaluate(inst, nb);
            archive.insert(std::move(f), std::move(nb));
        }
        if (hv_trace != nullptr && box != nullptr) { hv_trace->push_back(hv_normalized(archive.points(), *box, BoxPolicy::Clip)); }
    }
    if (stats != nullptr) { *stats = local; }
    return archive;
}

std::vector<Solution> random_policy(Instance const& inst, int count, std::uint64_t seed)
{
    if (count < 1) { throw BaselineError("random policy needs count >= 1"); }
    Rng rng = Rng::stream(seed, "random-policy");
    std::vector<Solution> out;
    for (int c = 0; c < count; ++c) {
        ConstructionState state(inst);
        while (!state.done()) {
            auto const mask = state.mask();
            std::vector<int> open;
            for (int a = 0; a < inst.n; ++a) {
                if (!mask[a]) { open.push_back(a); }
            }
            state.apply(open[rng.below(open.size())]);
        }
        out.push_back(state.solution());
    }
    return out;
}

} // namespace nhde
