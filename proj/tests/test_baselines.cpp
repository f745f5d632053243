#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "nhde/baselines.hpp"

using namespace nhde;

namespace {

double scalarized_value(Instance const& inst, Solution const& s, Weight const& l)
{
    double v = 0.0;
    for (int i : s.sequence) { v += l[0] * inst.values[i][0] + l[1] * inst.values[i][1]; }
    return v;
}

// Best scalarized value over all 2^n subsets, with the same integer weights the DP uses.
double enumerate_knapsack(Instance const& inst, Weight const& l, double resolution)
{
    auto const w = discretize_weights(inst, resolution);
    auto const cap = discretize_capacity(inst, resolution);
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1U << inst.n); ++mask) {
        long load = 0;
        double value = 0.0;
        for (int i = 0; i < inst.n; ++i) {
            if (mask >> i & 1U) {
                load += w[i];
                value += l[0] * inst.values[i][0] + l[1] * inst.values[i][1];
            }
        }
        if (load <= cap) { best = std::max(best, value); }
    }
    return best;
}

double tour_length(std::vector<Point2> const& pts, std::vector<int> const& tour)
{
    double len = 0.0;
    for (std::size_t i = 0; i < tour.size(); ++i) {
        auto a = pts[tour[i]];
        auto b = pts[tour[(i + 1) % tour.size()]];
        len += std::hypot(a.x - b.x, a.y - b.y);
    }
    return len;
}

Instance tsp_from(std::vector<Point2> const& pts)
{
    Instance inst;
    inst.kind = ProblemKind::MOTSP;
    inst.n = static_cast<int>(pts.size());
    for (auto p : pts) { inst.coords.push_back({p, p}); }
    return inst;
}

} // namespace

TEST_CASE("weighted-sum knapsack DP examples")
{
    Instance inst;
    inst.kind = ProblemKind::MOKP;
    inst.n = 2;
    inst.weights = {1, 1};
    inst.values = {{1, 2}, {2, 1}};
    inst.capacity = 1;
    CHECK(ws_dp_knapsack(inst, {0.5, 0.5}).value == doctest::Approx(1.5));
    auto r = ws_dp_knapsack(inst, {1, 0});
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.solution.sequence == std::vector<int>{1});
}

TEST_CASE("weighted-sum knapsack DP matches enumeration")
{
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        auto inst = generate_instance(ProblemKind::MOKP, 12, 2, rng.next());
        auto l = rng.simplex(2);
        auto r = ws_dp_knapsack(inst, l);
        CHECK(r.value == doctest::Approx(enumerate_knapsack(inst, l, 1000.0)).epsilon(1e-12));
        CHECK(scalarized_value(inst, r.solution, l) == doctest::Approx(r.value).epsilon(1e-12));
        CHECK_NOTHROW(evaluate(inst, r.solution));
    }
}

TEST_CASE("greedy construction")
{
    auto line = tsp_from({{0, 0}, {0.5, 0}, {1, 0}});
    auto s = greedy_ws_construct(line, {0.5, 0.5}, 0);
    std::vector<int> best;
    double best_len = 1e9;
    std::vector<int> perm{1, 2};
    do {
        std::vector<int> t{0, perm[0], perm[1]};
        double len = 0.0;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) { len += std::abs(line.coords[t[i + 1]][0].x - line.coords[t[i]][0].x); }
        if (len < best_len) {
            best_len = len;
            best = t;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(s.sequence == best);

    Instance kp;
    kp.kind = ProblemKind::MOKP;
    kp.n = 2;
    kp.weights = {0.4, 0.9};
    kp.values = {{0.3, 0.2}, {0.9, 0.9}};
    kp.capacity = 0.5;
    CHECK(greedy_ws_construct(kp, {0.5, 0.5}).sequence == std::vector<int>{0});

    for (auto kind : {ProblemKind::MOTSP, ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        auto inst = generate_instance(kind, 15, 2, 2);
        CHECK_NOTHROW(evaluate(inst, greedy_ws_construct(inst, {0.3, 0.7})));
    }
}

TEST_CASE("2-opt repairs a crossing square tour")
{
    std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    auto inst = tsp_from(sq);
    Solution crossing{{0, 2, 1, 3}};
    CHECK(evaluate(inst, crossing)[0] == doctest::Approx(2 + 2 * std::sqrt(2.0)));
    double best = 1e9;
    for (auto const& nb : two_opt_neighbours(crossing)) { best = std::min(best, tour_length(sq, nb.sequence)); }
    std::vector<int> perm{1, 2, 3};
    double optimum = 1e9;
    do {
        optimum = std::min(optimum, tour_length(sq, {0, perm[0], perm[1], perm[2]}));
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(best == doctest::Approx(optimum));
    CHECK(best == doctest::Approx(4.0));
    auto archive = pareto_local_search(inst, {crossing}, 5, 1);
    CHECK(archive.points().front()[0] == doctest::Approx(4.0));
}

TEST_CASE("local search with no iterations filters its seeds")
{
    auto inst = generate_instance(ProblemKind::MOTSP, 8, 2, 4);
    std::vector<Solution> seeds;
    for (auto const& l : uniform_weight_set(2, 4)) { seeds.push_back(greedy_ws_construct(inst, l)); }
    auto a = pareto_local_search(inst, seeds, 0, 1);
    ParetoArchive want;
    for (auto const& s : seeds) { want.insert(evaluate(inst, s), s); }
    auto got = a.points();
    auto expect = want.points();
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);

    LocalSearchStats stats;
    std::vector<double> trace;
    auto box = default_box(ProblemKind::MOTSP, 8, 2);
    pareto_local_search(inst, seeds, 10, 1, &stats, &trace, &box);
    CHECK(std::is_sorted(trace.begin(), trace.end()));
    CHECK(stats.explored <= 10);
}

TEST_CASE("knapsack neighbours stay feasible")
{
    auto inst = generate_instance(ProblemKind::MOKP, 12, 2, 3);
    auto s = greedy_ws_construct(inst, {0.5, 0.5});
    for (auto const& nb : knapsack_neighbours(inst, s)) { CHECK_NOTHROW(evaluate(inst, nb)); }
}

TEST_CASE("random policy")
{
    auto inst = generate_instance(ProblemKind::MOTSP, 7, 2, 4);
    auto sols = random_policy(inst, 20, 5);
    CHECK(sols.size() == 20);
    for (auto const& s : sols) {
        auto sorted = s.sequence;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> iota(7);
        std::iota(iota.begin(), iota.end(), 0);
        CHECK(sorted == iota);
    }
    CHECK(random_policy(inst, 20, 5) == sols);
}
