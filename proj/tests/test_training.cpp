#include <cmath>

#include "doctest.h"
#include "nhde/training.hpp"

using namespace nhde;

namespace {

std::vector<TrainItem> make_items(ProblemKind kind, int n, int count, std::uint64_t seed)
{
    std::vector<TrainItem> items;
    auto box = default_box(kind, n, 2);
    for (int i = 0; i < count; ++i) {
        TrainItem it;
        it.instance = generate_instance(kind, n, 2, seed + i);
        it.box = box;
        it.front.reference = box.r;
        items.push_back(std::move(it));
    }
    return items;
}

} // namespace

TEST_CASE("reward arithmetic")
{
    CHECK(reward(5.0, 0.9, {1, 0}) == doctest::Approx(-5.0));
    CHECK(reward(3.0, 0.375, {0, 1}) == doctest::Approx(0.375));
    CHECK(reward(0.2, 0.375, {0.5, 0.5}) == doctest::Approx(0.0875));
    ReferenceBox box{{4, 4}, {0, 0}};
    CHECK(normalized_g({0, 0}, {0.5, 0.5}, box) == doctest::Approx(0.0));
    CHECK(normalized_g({4, 4}, {0.3, 0.7}, box) == doctest::Approx(1.0));
    double const r = candidate_reward({2, 2}, {{1, 3}, {3, 1}}, {0.5, 0.5}, {0.5, 0.5}, box);
    CHECK(r == doctest::Approx(-0.5 * 0.5 + 0.5 * 0.375));
}

TEST_CASE("ablated preferences")
{
    Preference p{{0.3, 0.7}, {0.4, 0.6}};
    auto a = ablate_preference(p, {false, true, true});
    CHECK(a.w == DiversityFactor{1, 0});
    auto b = ablate_preference(p, {true, false, true});
    CHECK(b.w == DiversityFactor{0, 1});
    CHECK(b.lambda[0] == doctest::Approx(0.5));
    CHECK_THROWS_AS(Ablation({false, false, true}).validate(), TrainingError);

    ParetoArchive archive;
    archive.insert({1, 3}, {});
    archive.insert({3, 1}, {});
    archive.insert({2, 2}, {});
    ReferenceBox box{{4, 4}, {0, 0}};
    CHECK(ablate_surrogate(archive, {0.5, 0.5}, 2, box, {false, true, true}).points.empty());
    CHECK(ablate_surrogate(archive, {0.5, 0.5}, 1, box, {true, false, true}).points.size() == 3);
    CHECK(ablate_surrogate(archive, {0.5, 0.5}, 2, box, {}).points.size() == 2);
}

TEST_CASE("policy gradient equals the gradient of the surrogate loss")
{
    auto cfg = ModelConfig::desk(ProblemKind::MOTSP, 2);
    cfg.d = 8;
    cfg.ff_hidden = 8;
    cfg.hyper_hidden = 8;
    auto model = init_model(cfg, 4);
    auto items = make_items(ProblemKind::MOTSP, 6, 2, 30);
    items[0].front.points.push_back({{3.0, 3.5}, {}});
    Preference pref{{0.3, 0.7}, {0.5, 0.5}};
    Rng rng(12);
    auto pg = policy_gradient(model, items, pref, 0, rng);
    double const base = surrogate_loss(model, items, pref, pg.solutions, pg.advantages);
    CHECK(base == doctest::Approx(pg.loss).epsilon(1e-9));

    Rng pick(3);
    double const h = 1e-5;
    int checked = 0;
    for (auto const& [name, g] : pg.grads) {
        if (pick.below(4) != 0) { continue; }
        std::size_t const idx = pick.below(g.size());
        auto plus = model;
        auto minus = model;
        plus.params.at(name).data[idx] += h;
        minus.params.at(name).data[idx] -= h;
        double const fd = (surrogate_loss(plus, items, pref, pg.solutions, pg.advantages) -
                           surrogate_loss(minus, items, pref, pg.solutions, pg.advantages)) / (2 * h);
        CHECK(g.data[idx] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("identical rewards give no gradient")
{
    // A two-node tour has one possible length from every start.
    auto model = init_model(ModelConfig::desk(ProblemKind::MOTSP, 2), 1);
    auto items = make_items(ProblemKind::MOTSP, 2, 1, 5);
    Rng rng(1);
    auto pg = policy_gradient(model, items, {{0.5, 0.5}, {1, 0}}, 0, rng);
    for (auto const& a : pg.advantages[0]) { CHECK(a == doctest::Approx(0.0)); }
    CHECK(global_norm(pg.grads) == doctest::Approx(0.0));
}

TEST_CASE("gradient clipping")
{
    ParamStore g;
    g["a"] = ad::Matrix(1, 2);
    g["a"].data = {3, 4};
    CHECK(global_norm(g) == doctest::Approx(5.0));
    clip_gradients(g, 1.0);
    CHECK(global_norm(g) == doctest::Approx(1.0));
}

TEST_CASE("training is deterministic and changes the parameters")
{
    TrainConfig cfg;
    cfg.n = 6;
    cfg.B = 2;
    cfg.N_prime = 2;
    cfg.E = 3;
    cfg.lr = 1e-3;
    cfg.seed = 8;
    auto mc = ModelConfig::desk(ProblemKind::MOTSP, 2);
    auto a = train_nhde_p(cfg, mc);
    auto b = train_nhde_p(cfg, mc);
    CHECK(a.params == b.params);
    CHECK(a.params != init_model(mc, cfg.seed).params);
}

TEST_CASE("meta-training epsilon schedule")
{
    TrainConfig cfg;
    cfg.n = 5;
    cfg.B = 2;
    cfg.seed = 3;
    MetaConfig meta;
    meta.T_m = 3;
    meta.N_prime = 4;
    meta.E = 1;
    meta.E_f = 0;
    auto mc = ModelConfig::desk(ProblemKind::MOTSP, 2);
    mc.hypernetwork = false;
    MetaTrace trace;
    auto model = meta_train_nhde_m(meta, cfg, mc, {}, &trace);
    REQUIRE(trace.epsilon.size() == 12);
    for (std::size_t i = 0; i < trace.epsilon.size(); ++i) {
        CHECK(trace.epsilon[i] == doctest::Approx(1.0 - (i + 1) / 12.0).scale(1.0));
    }
    auto subs = finetune_nhde_m(model, {{{0.5, 0.5}, {1, 0}}, {{1, 0}, {0, 1}}}, 0, cfg);
    REQUIRE(subs.size() == 2);
    CHECK(subs[0].params == model.params);
    CHECK(subs[1].params == model.params);
    auto tuned = finetune_nhde_m(model, {{{0.5, 0.5}, {1, 0}}}, 1, cfg);
    CHECK(tuned[0].params != model.params);
}
