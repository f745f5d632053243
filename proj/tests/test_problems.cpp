#include <cmath>

#include "doctest.h"
#include "nhde/problems.hpp"
#include "nhde/rng.hpp"

using namespace nhde;

namespace {

Instance square_tsp()
{
    Instance inst;
    inst.kind = ProblemKind::MOTSP;
    inst.n = 4;
    inst.M = 2;
    for (Point2 p : {Point2{0, 0}, Point2{0, 1}, Point2{1, 1}, Point2{1, 0}}) { inst.coords.push_back({p, p}); }
    return inst;
}

Instance two_item_kp()
{
    Instance inst;
    inst.kind = ProblemKind::MOKP;
    inst.n = 2;
    inst.weights = {1, 1};
    inst.values = {{1, 2}, {2, 1}};
    inst.capacity = 1;
    return inst;
}

} // namespace

TEST_CASE("instance generation")
{
    auto tsp = generate_instance(ProblemKind::MOTSP, 20, 2, 4);
    CHECK(tsp.n == 20);
    CHECK(tsp.coords.size() == 20);
    CHECK(tsp.coords[0].size() == 2);
    CHECK(generate_instance(ProblemKind::MOCVRP, 20, 2, 4).capacity == 30);
    CHECK(generate_instance(ProblemKind::MOCVRP, 50, 2, 4).capacity == 40);
    CHECK(generate_instance(ProblemKind::MOCVRP, 100, 2, 4).capacity == 50);
    CHECK(generate_instance(ProblemKind::MOKP, 50, 2, 4).capacity == 12.5);
    CHECK(generate_instance(ProblemKind::MOKP, 100, 2, 4).capacity == 25);
    CHECK(generate_instance(ProblemKind::MOKP, 12, 2, 9) == generate_instance(ProblemKind::MOKP, 12, 2, 9));
    CHECK_THROWS(generate_instance(ProblemKind::MOKP, 10, 3, 1));
    for (auto k : {ProblemKind::MOTSP, ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        CHECK_NOTHROW(validate_instance(generate_instance(k, 15, 2, 3)));
    }
}

TEST_CASE("objective evaluation")
{
    auto f = evaluate(square_tsp(), Solution{{0, 1, 2, 3}});
    CHECK(f[0] == doctest::Approx(4.0));
    CHECK(f[1] == doctest::Approx(4.0));

    Instance cvrp;
    cvrp.kind = ProblemKind::MOCVRP;
    cvrp.n = 1;
    cvrp.depot = {0, 0};
    cvrp.coords = {{Point2{0, 1}}};
    cvrp.demands = {1};
    cvrp.capacity = 30;
    auto g = evaluate(cvrp, Solution{{0}});
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(2.0));

    auto h = to_reported(ProblemKind::MOKP, evaluate(two_item_kp(), Solution{{0}}));
    CHECK(h == ObjectiveVector{1, 2});
    CHECK_THROWS_AS(evaluate(two_item_kp(), Solution{{0, 1}}), ProblemError);
    CHECK_THROWS_AS(evaluate(square_tsp(), Solution{{0, 1, 1, 3}}), ProblemError);
}

TEST_CASE("feasibility masks")
{
    Instance tsp = square_tsp();
    tsp.n = 3;
    tsp.coords.pop_back();
    auto mask = feasible_actions(tsp, Solution{{0}});
    CHECK(mask == std::vector<bool>{true, false, false});

    Instance cvrp;
    cvrp.kind = ProblemKind::MOCVRP;
    cvrp.n = 3;
    cvrp.coords = {{Point2{0.1, 0.1}}, {Point2{0.2, 0.2}}, {Point2{0.3, 0.3}}};
    cvrp.demands = {8, 5, 1};
    cvrp.capacity = 10;
    ConstructionState s(cvrp);
    s.apply(0);
    CHECK(s.remaining_capacity() == 2);
    CHECK(s.mask()[1]);
    CHECK_FALSE(s.mask()[2]);

    Instance kp = two_item_kp();
    kp.weights = {0.9, 0.5};
    kp.capacity = 1.0;
    ConstructionState k(kp);
    k.apply(0);
    CHECK(k.mask()[1]);
    CHECK(k.done());
}

TEST_CASE("augmentation preserves tour lengths")
{
    auto inst = generate_instance(ProblemKind::MOTSP, 12, 2, 21);
    Solution tour{{3, 1, 4, 0, 5, 9, 2, 6, 8, 7, 11, 10}};
    auto f = evaluate(inst, tour);
    auto full = augment(inst, AugmentMode::Full);
    auto partial = augment(inst, AugmentMode::Partial);
    CHECK(full.size() == 64);
    CHECK(partial.size() == 32);
    CHECK(augment(inst, AugmentMode::None).size() == 1);
    for (auto const& v : full) {
        auto g = evaluate(v, tour);
        for (int m = 0; m < 2; ++m) { CHECK(std::abs(g[m] - f[m]) <= 1e-9); }
    }
    CHECK(augment(generate_instance(ProblemKind::MOTSP, 6, 3, 2), AugmentMode::Full).size() == 512);
}

TEST_CASE("solution text encoding")
{
    Solution s{{4, 0, 2}};
    CHECK(decode_solution(encode_solution(s)) == s);
    CHECK(decode_solution(encode_solution(Solution{})) == Solution{});
    CHECK_THROWS(decode_solution("1-x"));
}
