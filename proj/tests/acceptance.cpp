#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nhde/baselines.hpp"
#include "nhde/config.hpp"
#include "nhde/inference.hpp"
#include "nhde/training.hpp"
#include "test_support.hpp"

using namespace nhde;
using nhde::testing::inclusion_exclusion_hv;
using nhde::testing::naive_dominates;
using nhde::testing::naive_filter;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, std::string const& what, std::string const& detail)
{
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) { ++failures; }
}

std::string fmt(char const* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Every pipeline run made by this binary, for the monotonicity check.
struct PipelineLog {
    std::size_t runs = 0;
    std::size_t decreases = 0;
    std::size_t out_of_range = 0;
    double min_final = 1.0;
    double max_final = 0.0;
};
PipelineLog pipeline_log;

SolveResult logged_solve(Model const& model, Instance const& inst, PreferenceSchedule const& sched, SolveConfig const& cfg)
{
    auto const box = default_box(inst.kind, inst.n, inst.M);
    auto res = solve_sequence(model, inst, sched, cfg, box);
    ++pipeline_log.runs;
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        if (res.trace[i].hv < res.trace[i - 1].hv) { ++pipeline_log.decreases; }
    }
    double const final_hv = metrics(res.archive, box).hv;
    if (!(final_hv >= 0.0 && final_hv <= 1.0)) { ++pipeline_log.out_of_range; }
    pipeline_log.min_final = std::min(pipeline_log.min_final, final_hv);
    pipeline_log.max_final = std::max(pipeline_log.max_final, final_hv);
    return res;
}

void criterion_1()
{
    auto const t0 = Clock::now();
    Rng rng(20240601);
    int exceed = 0;
    int brute_checked = 0;
    int brute_bad = 0;
    double worst_z = 0.0;
    double worst_brute = 0.0;
    for (int i = 0; i < 1000; ++i) {
        int const M = i % 2 == 0 ? 2 : 3;
        auto const count = 1 + static_cast<std::size_t>(rng.below(50));
        auto pts = nhde::testing::random_front(rng, M, count);
        ReferenceBox box{ObjectiveVector(M, 1.1), ObjectiveVector(M, 0.0)};
        double const exact = hv_exact(pts, box.r);
        auto const mc = hv_monte_carlo(pts, box, 1000000, rng.next());
        double const z = std::abs(exact - mc.value) / mc.std_error;
        worst_z = std::max(worst_z, z);
        if (z > 3.0) { ++exceed; }
        if (pts.size() <= 6) {
            ++brute_checked;
            double const diff = std::abs(exact - inclusion_exclusion_hv(pts, box.r));
            worst_brute = std::max(worst_brute, diff);
            if (diff > 1e-9) { ++brute_bad; }
        }
    }
    double const secs = seconds_since(t0);
    report(1, exceed == 0 && brute_bad == 0 && secs < 120.0, "exact HV vs Monte-Carlo and inclusion-exclusion",
           fmt("1000 fronts: %d beyond 3 stderr, max |z| %.2f; %d fronts <= 6 points, max brute diff %.1e; %.1fs", exceed,
               worst_z, brute_checked, worst_brute, secs));
}

void criterion_2()
{
    Rng rng(77);
    std::size_t bad_dominance = 0;
    std::size_t bad_archive = 0;
    for (int c = 0; c < 100000; ++c) {
        int const M = 2 + static_cast<int>(rng.below(2));
        auto draw = [&] {
            ObjectiveVector p(M);
            for (auto& v : p) { v = static_cast<double>(rng.below(4)); }
            return p;
        };
        auto a = draw();
        auto b = draw();
        auto x = draw();
        bool ok = !dominates(a, a);
        ok = ok && !(dominates(a, b) && dominates(b, a));
        ok = ok && (!(dominates(a, b) && dominates(b, x)) || dominates(a, x));
        ok = ok && dominates(a, b) == naive_dominates(a, b);
        if (!ok) { ++bad_dominance; }

        ParetoArchive archive;
        std::vector<ObjectiveVector> inserted;
        auto const count = 1 + rng.below(12);
        for (std::uint64_t i = 0; i < count; ++i) {
            inserted.push_back(draw());
            archive.insert(inserted.back(), {});
        }
        auto got = archive.points();
        auto lib = nondominated_filter(inserted);
        auto want = naive_filter(inserted);
        std::sort(got.begin(), got.end());
        std::sort(lib.begin(), lib.end());
        std::sort(want.begin(), want.end());
        if (got != want || lib != want || !archive.valid()) { ++bad_archive; }
    }
    report(2, bad_dominance == 0 && bad_archive == 0, "dominance laws and archive invariant",
           fmt("100000 cases: %zu dominance violations, %zu archive mismatches", bad_dominance, bad_archive));
}

void criterion_3()
{
    Rng rng(31);
    int mismatches = 0;
    int over_budget = 0;
    std::uint64_t max_ratio_num = 0;
    std::uint64_t max_ratio_den = 1;
    auto random_point = [&](int M) {
        ObjectiveVector p(M);
        for (auto& v : p) { v = std::round(rng.uniform() * 40.0) / 40.0; }
        return p;
    };
    for (int c = 0; c < 500; ++c) {
        int const M = 2 + static_cast<int>(rng.below(2));
        ParetoArchive archive;
        auto const size = rng.below(60);
        for (std::uint64_t i = 0; i < size; ++i) { archive.insert(random_point(M), Solution{{static_cast<int>(i)}}); }
        std::vector<FrontPoint> cand;
        auto const gsize = 1 + rng.below(60);
        for (std::uint64_t i = 0; i < gsize; ++i) { cand.push_back({random_point(M), Solution{{1000 + static_cast<int>(i)}}}); }
        Weight const lambda = rng.simplex(static_cast<std::size_t>(M));
        ObjectiveVector const ref(M, 2.0);

        auto oracle = full_update_oracle(archive, cand);
        auto full = archive;
        auto surrogate = select_top_k(full, lambda, static_cast<int>(full.size()), ref);
        auto stats = mpo_update(full, surrogate, cand, MpoMode::ArchivePreserving);
        auto got = full.points();
        auto want = oracle.points();
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        if (got != want) { ++mismatches; }
        auto const K = static_cast<std::uint64_t>(surrogate.points.size());
        auto const J = static_cast<std::uint64_t>(cand.size());
        auto check_budget = [&](MpoStats const& s, std::uint64_t k, std::uint64_t j) {
            std::uint64_t const budget = (k + 1 + j) * j;
            if (s.comparisons > budget) { ++over_budget; }
            if (budget > 0 && s.comparisons * max_ratio_den > max_ratio_num * budget) {
                max_ratio_num = s.comparisons;
                max_ratio_den = budget;
            }
        };
        check_budget(stats, K, J);

        // Budget with the surrogate sizes used in practice.
        int const k_small = 1 + static_cast<int>(rng.below(20));
        int const j_small = 1 + static_cast<int>(rng.below(20));
        auto limited = archive;
        auto top = select_top_j(cand, lambda, j_small);
        auto s_small = select_top_k(limited, lambda, k_small, ref);
        auto small_stats = mpo_update(limited, s_small, top, MpoMode::ArchivePreserving);
        check_budget(small_stats, s_small.points.size(), top.size());
    }
    report(3, mismatches == 0 && over_budget == 0, "MPO update equals the exhaustive oracle within budget",
           fmt("500 cases: %d mismatches, %d over (K+1+J)J, max comparisons/budget %.3f", mismatches, over_budget,
               static_cast<double>(max_ratio_num) / static_cast<double>(max_ratio_den)));
}

void criterion_4()
{
    auto const t0 = Clock::now();
    double worst = 0.0;
    std::size_t checked = 0;
    for (auto kind : {ProblemKind::MOTSP, ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        auto cfg = ModelConfig::desk(kind, 2);
        cfg.d = 8;
        cfg.L = 2;
        cfg.Y = 2;
        auto const model = init_model(cfg, 404);
        auto const inst = generate_instance(kind, 6, 2, 405);
        auto const box = default_box(kind, 6, 2);
        std::vector<ObjectiveVector> pts;
        for (int i = 0; i < 3; ++i) {
            ObjectiveVector p(2);
            p[0] = box.z[0] + (0.25 + 0.2 * i) * (box.r[0] - box.z[0]);
            p[1] = box.z[1] + (0.65 - 0.2 * i) * (box.r[1] - box.z[1]);
            pts.push_back(p);
        }
        pts.push_back(box.r);
        auto rep = grad_check(model, inst, pts, box, {0.35, 0.65}, {0.6, 0.4}, 1e-4, 120, 406);
        worst = std::max(worst, rep.max_relative_error);
        checked += rep.checked;
    }
    double const secs = seconds_since(t0);
    report(4, worst <= 1e-3 && checked >= 100 && secs < 60.0, "gradient check on a desk-scale HGA",
           fmt("n=6, k=3, d=8, L=2, Y=2 on TSP/CVRP/KP: %zu parameters, max relative error %.2e; %.1fs", checked, worst, secs));
}

void criterion_5()
{
    auto two = uniform_weight_set(2, 39);
    auto three = uniform_weight_set(3, 19);
    auto distinct = [](std::vector<Weight> w) {
        std::sort(w.begin(), w.end());
        return std::adjacent_find(w.begin(), w.end()) == w.end();
    };
    bool simplex = true;
    for (auto const* set : {&two, &three}) {
        for (auto const& w : *set) {
            double s = 0.0;
            for (double x : w) {
                s += x;
                simplex = simplex && x >= 0.0;
            }
            simplex = simplex && std::abs(s - 1.0) < 1e-12;
        }
    }
    report(5, two.size() == 40 && three.size() == 210 && distinct(two) && distinct(three) && simplex, "uniform weight set sizes",
           fmt("M=2,H=39 -> %zu; M=3,H=19 -> %zu; all distinct and on the simplex: %s", two.size(), three.size(),
               simplex ? "yes" : "no"));
}

std::vector<Instance> held_out(int count)
{
    std::vector<Instance> out;
    for (int i = 0; i < count; ++i) { out.push_back(generate_instance(ProblemKind::MOTSP, 10, 2, 900000 + i)); }
    return out;
}

struct Eval {
    double hv = 0.0;
    double nds = 0.0;
    double ds = 0.0;
};

Eval evaluate_model(Model const& model, std::vector<Instance> const& instances, RunConfig const& cfg)
{
    auto const sched = make_schedule(uniform_weight_set_of_size(cfg.M, cfg.N), cfg.seed(), cfg.shuffle);
    Eval e;
    for (auto const& inst : instances) {
        auto res = logged_solve(model, inst, sched, cfg.solve);
        auto m = metrics(res.archive, default_box(inst.kind, inst.n, inst.M));
        e.hv += m.hv;
        e.nds += static_cast<double>(m.nds);
        e.ds += static_cast<double>(duplicates_count(res.generated));
    }
    auto const n = static_cast<double>(instances.size());
    return {e.hv / n, e.nds / n, e.ds / n};
}

void criterion_6()
{
    auto const t0 = Clock::now();
    auto cfg = default_run_config(ProblemKind::MOTSP, 2);
    cfg.set_seed(42);
    auto const instances = held_out(20);
    auto const untrained = init_model(cfg.model, cfg.seed());
    auto const trained = train_nhde_p(cfg.train, cfg.model);
    double const secs_train = seconds_since(t0);

    Eval const before = evaluate_model(untrained, instances, cfg);
    Eval const after = evaluate_model(trained, instances, cfg);
    double random_hv = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        ParetoArchive a;
        for (auto const& s : random_policy(instances[i], cfg.N * instances[i].n, 5000 + i)) { a.insert(evaluate(instances[i], s), s); }
        random_hv += metrics(a, default_box(ProblemKind::MOTSP, 10, 2)).hv;
    }
    random_hv /= static_cast<double>(instances.size());
    double const secs = seconds_since(t0);
    double const r_untrained = after.hv / before.hv;
    double const r_random = after.hv / random_hv;
    report(6, r_untrained >= 1.05 && r_random >= 1.10 && secs < 900.0, "training improves validation HV",
           fmt("Bi-TSP n=10, B=8, N'=5, E=200, seed 42: HV %.4f vs untrained %.4f (x%.3f) and random %.4f (x%.3f); "
               "training %.1fs, total %.1fs",
               after.hv, before.hv, r_untrained, random_hv, r_random, secs_train, secs));
}

void criterion_7()
{
    auto const instances = held_out(20);
    Eval full{};
    Eval ablated{};
    std::string per_seed;
    for (std::uint64_t seed : {101, 202, 303}) {
        auto cfg = default_run_config(ProblemKind::MOTSP, 2);
        cfg.set_seed(seed);
        auto abl = cfg;
        abl.train.ablation = abl.solve.ablation = Ablation{false, true, false};
        Eval const f = evaluate_model(train_nhde_p(cfg.train, cfg.model), instances, cfg);
        Eval const a = evaluate_model(train_nhde_p(abl.train, abl.model), instances, abl);
        full.hv += f.hv / 3;
        full.nds += f.nds / 3;
        full.ds += f.ds / 3;
        ablated.hv += a.hv / 3;
        ablated.nds += a.nds / 3;
        ablated.ds += a.ds / 3;
        per_seed += fmt(" seed %llu: NDS %.2f/%.2f DS %.2f/%.2f;", static_cast<unsigned long long>(seed), f.nds, a.nds, f.ds, a.ds);
    }
    report(7, full.nds >= ablated.nds && full.ds <= ablated.ds, "diversity trend against the no-indicator, no-MPO ablation",
           fmt("NHDE-P |NDS| %.2f vs %.2f, |DS| %.2f vs %.2f, HV %.4f vs %.4f;%s", full.nds, ablated.nds, full.ds, ablated.ds,
               full.hv, ablated.hv, per_seed.c_str()));
}

void criterion_8()
{
    Rng rng(8080);
    int dp_mismatch = 0;
    int exceeded = 0;
    int real_disagree = 0;
    std::size_t solutions_checked = 0;
    double const resolution = 1000.0;
    auto model_cfg = ModelConfig::desk(ProblemKind::MOKP, 2);
    auto const model = init_model(model_cfg, 81);
    for (int c = 0; c < 50; ++c) {
        auto const inst = generate_instance(ProblemKind::MOKP, 12, 2, rng.next());
        Weight const lambda = rng.simplex(2);
        auto const w = discretize_weights(inst, resolution);
        auto const cap = discretize_capacity(inst, resolution);
        auto value_of = [&](std::uint32_t mask) {
            double v = 0.0;
            for (int i = 0; i < 12; ++i) {
                if (mask >> i & 1U) { v += lambda[0] * inst.values[i][0] + lambda[1] * inst.values[i][1]; }
            }
            return v;
        };
        double best = 0.0;
        double best_real = 0.0;
        for (std::uint32_t mask = 0; mask < (1U << 12); ++mask) {
            long load = 0;
            double real_load = 0.0;
            for (int i = 0; i < 12; ++i) {
                if (mask >> i & 1U) {
                    load += w[i];
                    real_load += inst.weights[i];
                }
            }
            double const v = value_of(mask);
            if (load <= cap) { best = std::max(best, v); }
            if (real_load <= inst.capacity) { best_real = std::max(best_real, v); }
        }
        auto const dp = ws_dp_knapsack(inst, lambda, resolution);
        std::uint32_t dp_mask = 0;
        for (int i : dp.solution.sequence) { dp_mask |= 1U << i; }
        if (value_of(dp_mask) != best) { ++dp_mismatch; }
        if (best != best_real) { ++real_disagree; }

        // Outputs of every method on this instance, scored under lambda.
        std::vector<ObjectiveVector> produced;
        auto sched = make_schedule(uniform_weight_set_of_size(2, 10), 7, true);
        auto res = logged_solve(model, inst, sched, SolveConfig{});
        produced = res.generated;
        for (auto const& s : random_policy(inst, 100, 9)) { produced.push_back(evaluate(inst, s)); }
        std::vector<Solution> seeds;
        for (auto const& l : uniform_weight_set(2, 9)) { seeds.push_back(greedy_ws_construct(inst, l)); }
        for (auto const& s : seeds) { produced.push_back(evaluate(inst, s)); }
        auto const pls = pareto_local_search(inst, seeds, 50, 3);
        for (auto const& e : pls.entries()) { produced.push_back(e.f); }
        for (auto const& f : produced) {
            ++solutions_checked;
            if (-(lambda[0] * f[0] + lambda[1] * f[1]) > dp.value + 1e-12) { ++exceeded; }
        }
    }
    report(8, dp_mismatch == 0 && exceeded == 0, "knapsack DP against enumeration and pipeline outputs",
           fmt("Bi-KP n=12, 50 pairs: %d DP/enumeration mismatches (%d pairs where the discretized and real optima differ); "
               "%zu produced solutions, %d above the DP optimum",
               dp_mismatch, real_disagree, solutions_checked, exceeded));
}

void criterion_9()
{
    Rng rng(909);
    bool counts = true;
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        auto const inst = generate_instance(ProblemKind::MOTSP, 15, 2, rng.next());
        std::vector<int> tour(15);
        for (int i = 0; i < 15; ++i) { tour[i] = i; }
        rng.shuffle(tour);
        auto const f = evaluate(inst, Solution{tour});
        auto const full = augment(inst, AugmentMode::Full);
        auto const partial = augment(inst, AugmentMode::Partial);
        counts = counts && full.size() == 64 && partial.size() == 32;
        for (auto const* set : {&full, &partial}) {
            for (auto const& v : *set) {
                auto const g = evaluate(v, Solution{tour});
                for (int m = 0; m < 2; ++m) { worst = std::max(worst, std::abs(g[m] - f[m])); }
            }
        }
    }
    auto const tri = generate_instance(ProblemKind::MOTSP, 8, 3, 5);
    bool const tri_counts = augment(tri, AugmentMode::Full).size() == 512 && augment(tri, AugmentMode::Partial).size() == 128;
    report(9, counts && tri_counts && worst <= 1e-9, "augmentation invariance",
           fmt("Bi-TSP full 64 / partial 32 variants: %s; Tri-TSP 512 / 128: %s; max objective change %.1e", counts ? "yes" : "no",
               tri_counts ? "yes" : "no", worst));
}

void criterion_10()
{
    // Pipeline runs across problem kinds and settings, on top of those made above.
    struct Case {
        ProblemKind kind;
        int M;
        AugmentMode aug;
        RolloutMode mode;
    };
    std::vector<Case> cases{{ProblemKind::MOTSP, 2, AugmentMode::None, RolloutMode::Greedy},
                            {ProblemKind::MOTSP, 2, AugmentMode::Partial, RolloutMode::Sample},
                            {ProblemKind::MOTSP, 3, AugmentMode::None, RolloutMode::Greedy},
                            {ProblemKind::MOCVRP, 2, AugmentMode::Full, RolloutMode::Greedy},
                            {ProblemKind::MOCVRP, 2, AugmentMode::None, RolloutMode::Sample},
                            {ProblemKind::MOKP, 2, AugmentMode::None, RolloutMode::Greedy}};
    for (auto const& c : cases) {
        auto const model = init_model(ModelConfig::desk(c.kind, c.M), 10);
        auto sched = make_schedule(uniform_weight_set_of_size(c.M, c.M == 2 ? 20 : 21), 3, true);
        SolveConfig cfg;
        cfg.augment = c.aug;
        cfg.mode = c.mode;
        for (int i = 0; i < 5; ++i) { logged_solve(model, generate_instance(c.kind, 12, c.M, 700 + i), sched, cfg); }
    }
    auto const& log = pipeline_log;
    report(10, log.decreases == 0 && log.out_of_range == 0, "monotone HV traces and normalized final HV",
           fmt("%zu pipeline runs: %zu trace decreases, %zu final HV outside [0,1], final HV range [%.4f, %.4f]", log.runs,
               log.decreases, log.out_of_range, log.min_final, log.max_final));
}

} // namespace

int main()
{
    std::vector<std::pair<int, std::function<void()>>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
        {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10}};
    for (auto const& [id, run] : criteria) {
        try {
            run();
        } catch (std::exception const& e) {
            report(id, false, "raised an exception", e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
