#include <cmath>
#include <set>

#include "doctest.h"
#include "nhde/hga.hpp"

using namespace nhde;

namespace {

std::vector<ObjectiveVector> front_with_reference(ReferenceBox const& box, std::vector<ObjectiveVector> pts)
{
    pts.push_back(box.r);
    return pts;
}

std::vector<ad::Matrix> node_embeddings(Model const& model, PolicyInput const& in)
{
    ad::Tape tape;
    BoundParams p(tape, model.params, false);
    auto emb = encode(tape, p, model.config, {in});
    return {emb[0].nodes.value()};
}

} // namespace

TEST_CASE("initialization is deterministic and bounded")
{
    auto cfg = ModelConfig::desk(ProblemKind::MOTSP, 2);
    auto a = init_model(cfg, 3);
    auto b = init_model(cfg, 3);
    CHECK(a.params == b.params);
    CHECK(init_model(cfg, 4).params != a.params);
    double const bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (auto const& [name, m] : a.params) {
        if (name.find("gamma") != std::string::npos || name.find("beta") != std::string::npos) { continue; }
        for (double v : m.data) { CHECK(std::abs(v) <= bound); }
    }
    CHECK(parameter_count(a.params) == parameter_count(cfg));
}

TEST_CASE("silenced point projections reduce node attention to the homogeneous case")
{
    auto cfg = ModelConfig::desk(ProblemKind::MOTSP, 2);
    auto model = init_model(cfg, 5);
    for (int l = 0; l < cfg.L; ++l) {
        for (char const* t : {"Wq_g", "Wk_g", "Wv_g"}) {
            auto& m = model.params.at("enc.l" + std::to_string(l) + "." + t);
            std::fill(m.data.begin(), m.data.end(), 0.0);
        }
    }
    auto inst = generate_instance(ProblemKind::MOTSP, 6, 2, 1);
    ReferenceBox box = default_box(ProblemKind::MOTSP, 6, 2);
    auto in1 = make_input(inst, front_with_reference(box, {{2.0, 3.0}}), box);
    auto in2 = make_input(inst, front_with_reference(box, {{1.5, 4.0}, {3.0, 1.0}}), box);
    auto homogeneous = model;
    homogeneous.config.node_to_point = false;
    homogeneous.config.point_to_node = false;
    auto h1 = node_embeddings(model, in1)[0];
    auto h2 = node_embeddings(model, in2)[0];
    auto h0 = node_embeddings(homogeneous, in1)[0];
    for (std::size_t i = 0; i < h0.size(); ++i) {
        CHECK(h1.data[i] == doctest::Approx(h0.data[i]).epsilon(1e-12));
        CHECK(h2.data[i] == doctest::Approx(h0.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("decode step respects the mask")
{
    for (auto kind : {ProblemKind::MOTSP, ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        auto model = init_model(ModelConfig::desk(kind, 2), 2);
        auto inst = generate_instance(kind, 8, 2, 3);
        auto box = default_box(kind, 8, 2);
        std::vector<Solution> partials{Solution{{0}}, Solution{{2, 5}}};
        auto probs = decode_step(model, inst, front_with_reference(box, {}), box, {0.4, 0.6}, {0.5, 0.5}, partials);
        REQUIRE(probs.size() == 2);
        for (std::size_t r = 0; r < partials.size(); ++r) {
            auto mask = feasible_actions(inst, partials[r]);
            double total = 0.0;
            for (std::size_t a = 0; a < probs[r].size(); ++a) {
                if (mask[a]) { CHECK(probs[r][a] == 0.0); }
                total += probs[r][a];
            }
            CHECK(total == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("zero decoder output gives a uniform distribution")
{
    auto model = init_model(ModelConfig::desk(ProblemKind::MOTSP, 2), 2);
    for (auto& [name, m] : model.params) {
        if (name.rfind("hyper.head.", 0) == 0) { std::fill(m.data.begin(), m.data.end(), 0.0); }
    }
    auto inst = generate_instance(ProblemKind::MOTSP, 7, 2, 3);
    auto box = default_box(ProblemKind::MOTSP, 7, 2);
    auto probs = decode_step(model, inst, front_with_reference(box, {}), box, {0.5, 0.5}, {1, 0}, {Solution{{3, 1}}});
    for (std::size_t a = 0; a < 7; ++a) {
        if (a == 3 || a == 1) {
            CHECK(probs[0][a] == 0.0);
        } else {
            CHECK(probs[0][a] == doctest::Approx(0.2));
        }
    }
}

TEST_CASE("hypernetwork output depends only on the preference")
{
    auto model = init_model(ModelConfig::desk(ProblemKind::MOTSP, 2), 7);
    auto gen = [&](Weight const& l, DiversityFactor w) {
        ad::Tape tape;
        BoundParams p(tape, model.params, false);
        auto dec = decoder_params(tape, p, model.config, l, w);
        std::map<std::string, ad::Matrix> out;
        for (auto const& [k, v] : dec) { out[k] = v.value(); }
        return out;
    };
    CHECK(gen({0.2, 0.8}, {0.3, 0.7}) == gen({0.2, 0.8}, {0.3, 0.7}));
    CHECK(gen({0.2, 0.8}, {0.3, 0.7}) != gen({0.6, 0.4}, {0.3, 0.7}));
}

TEST_CASE("multi-start rollouts")
{
    auto model = init_model(ModelConfig::desk(ProblemKind::MOTSP, 2), 9);
    auto inst = generate_instance(ProblemKind::MOTSP, 8, 2, 1);
    auto box = default_box(ProblemKind::MOTSP, 8, 2);
    auto pts = front_with_reference(box, {});
    auto out = rollout(model, inst, pts, box, {0.5, 0.5}, {1, 0}, 8, RolloutMode::Greedy, 1);
    REQUIRE(out.solutions.size() == 8);
    std::set<int> firsts;
    for (auto const& s : out.solutions) {
        firsts.insert(s.sequence.front());
        CHECK_NOTHROW(evaluate(inst, s));
    }
    CHECK(firsts.size() == 8);
    auto again = rollout(model, inst, pts, box, {0.5, 0.5}, {1, 0}, 8, RolloutMode::Greedy, 99);
    CHECK(again.solutions == out.solutions);

    for (auto kind : {ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        auto m = init_model(ModelConfig::desk(kind, 2), 9);
        auto in = generate_instance(kind, 10, 2, 4);
        auto b = default_box(kind, 10, 2);
        auto s = rollout(m, in, front_with_reference(b, {}), b, {0.5, 0.5}, {0.5, 0.5}, 0, RolloutMode::Sample, 3);
        CHECK(s.solutions.size() == 10);
        for (auto const& sol : s.solutions) { CHECK_NOTHROW(evaluate(in, sol)); }
        for (double lp : s.log_probs) { CHECK(lp <= 1e-12); }
    }
}

TEST_CASE("analytic gradients match finite differences")
{
    for (auto kind : {ProblemKind::MOTSP, ProblemKind::MOCVRP, ProblemKind::MOKP}) {
        auto cfg = ModelConfig::desk(kind, 2);
        cfg.d = 8;
        cfg.ff_hidden = 16;
        cfg.hyper_hidden = 16;
        auto model = init_model(cfg, 21);
        auto inst = generate_instance(kind, 6, 2, 5);
        auto box = default_box(kind, 6, 2);
        std::vector<ObjectiveVector> pts;
        for (int i = 0; i < 3; ++i) {
            ObjectiveVector p(2);
            for (int m = 0; m < 2; ++m) { p[m] = box.z[m] + (0.3 + 0.2 * i) * (box.r[m] - box.z[m]); }
            pts.push_back(p);
        }
        auto report = grad_check(model, inst, front_with_reference(box, pts), box, {0.3, 0.7}, {0.6, 0.4}, 1e-4, 60, 2);
        CHECK(report.checked == 60);
        CHECK(report.max_relative_error <= 1e-3);
    }
}
