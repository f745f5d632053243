#include <algorithm>

#include "doctest.h"
#include "nhde/mpo.hpp"
#include "test_support.hpp"

using namespace nhde;

namespace {

ParetoArchive archive_of(std::vector<ObjectiveVector> const& pts)
{
    ParetoArchive a;
    for (auto const& p : pts) { a.insert(p, {}); }
    return a;
}

std::vector<FrontPoint> points_of(std::vector<ObjectiveVector> const& pts)
{
    std::vector<FrontPoint> out;
    for (auto const& p : pts) { out.push_back({p, {}}); }
    return out;
}

std::vector<ObjectiveVector> sorted_points(ParetoArchive const& a)
{
    auto p = a.points();
    std::sort(p.begin(), p.end());
    return p;
}

} // namespace

TEST_CASE("top-K surrogate selection")
{
    auto a = archive_of({{1, 3}, {2, 2}, {3, 1}});
    auto s = select_top_k(a, {1, 0}, 2, {4, 4});
    REQUIRE(s.points.size() == 2);
    CHECK(s.points[0].f == ObjectiveVector{1, 3});
    CHECK(s.points[1].f == ObjectiveVector{2, 2});
    CHECK(s.size_with_reference() == 3);
    CHECK(select_top_k(ParetoArchive{}, {0.5, 0.5}, 5, {4, 4}).points.empty());
    CHECK(select_top_k(a, {0.5, 0.5}, 10, {4, 4}).points.size() == 3);
}

TEST_CASE("top-J candidate selection")
{
    Rng rng(2);
    std::vector<FrontPoint> c;
    for (int i = 0; i < 300; ++i) { c.push_back({{rng.uniform(), rng.uniform()}, {}}); }
    auto kept = select_top_j(c, {0.5, 0.5}, 200);
    CHECK(kept.size() == 200);
    std::vector<double> scores;
    for (auto const& p : c) { scores.push_back(0.5 * p.f[0] + 0.5 * p.f[1]); }
    std::sort(scores.begin(), scores.end());
    double worst_kept = 0.0;
    for (auto const& p : kept) { worst_kept = std::max(worst_kept, 0.5 * p.f[0] + 0.5 * p.f[1]); }
    CHECK(worst_kept == scores[199]);
    CHECK(select_top_j(c, {1, 0}, 400).size() == 300);
}

TEST_CASE("MPO update examples")
{
    for (auto mode : {MpoMode::Literal, MpoMode::ArchivePreserving}) {
        auto a = archive_of({{1, 3}, {3, 1}});
        auto s = select_top_k(a, {0.5, 0.5}, 5, {5, 5});
        auto cand = points_of({{2, 2}, {4, 4}});
        mpo_update(a, s, cand, mode);
        CHECK(sorted_points(a) == std::vector<ObjectiveVector>{{1, 3}, {2, 2}, {3, 1}});

        auto b = archive_of({{1, 3}, {3, 1}});
        auto sb = select_top_k(b, {0.5, 0.5}, 5, {5, 5});
        auto dominated = points_of({{4, 4}, {3, 3}});
        mpo_update(b, sb, dominated, mode);
        CHECK(sorted_points(b) == std::vector<ObjectiveVector>{{1, 3}, {3, 1}});

        ParetoArchive e;
        auto se = select_top_k(e, {0.5, 0.5}, 5, {5, 5});
        auto g = points_of({{2, 2}, {1, 4}, {3, 3}});
        mpo_update(e, se, g, mode);
        CHECK(sorted_points(e) == std::vector<ObjectiveVector>{{1, 4}, {2, 2}});
    }
}

TEST_CASE("archive-preserving update matches the exhaustive oracle")
{
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        ParetoArchive a;
        for (int i = 0; i < 50; ++i) { a.insert({rng.uniform(), rng.uniform()}, {}); }
        std::vector<FrontPoint> cand;
        for (int i = 0; i < 50; ++i) { cand.push_back({{rng.uniform(), rng.uniform()}, {}}); }
        auto oracle = full_update_oracle(a, cand);
        auto s = select_top_k(a, {0.5, 0.5}, static_cast<int>(a.size()), {2, 2});
        mpo_update(a, s, cand, MpoMode::ArchivePreserving);
        CHECK(sorted_points(a) == sorted_points(oracle));

        std::vector<ObjectiveVector> all = a.points();
        for (auto const& c : cand) { all.push_back(c.f); }
        auto brute = nhde::testing::naive_filter(all);
        std::sort(brute.begin(), brute.end());
        CHECK(sorted_points(a) == brute);
    }
}

TEST_CASE("admission comparisons stay within the surrogate budget")
{
    Rng rng(10);
    int const K = 5;
    int const J = 20;
    ParetoArchive a;
    for (int i = 0; i < 40; ++i) { a.insert({rng.uniform(), rng.uniform()}, {}); }
    std::vector<FrontPoint> cand;
    for (int i = 0; i < 200; ++i) { cand.push_back({{rng.uniform(), rng.uniform()}, {}}); }
    auto top = select_top_j(cand, {0.3, 0.7}, J);
    auto s = select_top_k(a, {0.3, 0.7}, K, {2, 2});
    auto stats = mpo_update(a, s, top, MpoMode::ArchivePreserving);
    CHECK(stats.comparisons <= static_cast<std::uint64_t>((K + 1 + J) * J));
    CHECK(stats.admitted <= static_cast<std::size_t>(J));
}
