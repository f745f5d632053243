#include "nhde/inference.hpp"

#include <chrono>
#include <set>

namespace nhde {

SolveResult solve_sequence(ModelSelector const& models, Instance const& inst, PreferenceSchedule const& schedule,
                           SolveConfig const& cfg, ReferenceBox const& box)
{
    cfg.ablation.validate();
    box.validate();
    auto const t0 = std::chrono::steady_clock::now();
    std::vector<Instance> variants = inst.kind == ProblemKind::MOKP ? std::vector<Instance>{inst} : augment(inst, cfg.augment);

    SolveResult result;
    for (std::size_t i = 0; i < schedule.items.size(); ++i) {
        auto const pref = ablate_preference(schedule.items[i], cfg.ablation);
        Model const& model = models(i);
        if (model.config.kind != inst.kind || model.config.M != inst.M) {
            throw ModelError("model does not match the instance kind");
        }
        auto const front = ablate_surrogate(result.archive, pref.lambda, cfg.mpo.K, box, cfg.ablation);
        auto const input = front.objectives();

        std::vector<FrontPoint> candidates;
        for (std::size_t a = 0; a < variants.size(); ++a) {
            auto out = rollout(model, variants[a], input, box, pref.lambda, pref.w, cfg.starts, cfg.mode,
                               splitmix64(cfg.seed ^ splitmix64(i * variants.size() + a)));
            for (auto& sol : out.solutions) {
                auto f = evaluate(inst, sol);
                result.generated.push_back(f);
                candidates.push_back({std::move(f), std::move(sol)});
            }
        }

        TraceRow row;
        row.step = i + 1;
        row.candidates = candidates.size();
        if (cfg.ablation.mpo) {
            auto top = select_top_j(std::move(candidates), pref.lambda, cfg.mpo.J);
            row.comparisons = mpo_update(result.archive, front, top, cfg.mpo.mode).comparisons;
        } else {
            update_archive(result.archive, front, std::move(candidates), pref, box, cfg.mpo, cfg.ablation);
        }
        row.hv = hv_normalized(result.archive.points(), box, BoxPolicy::Clip);
        row.archive_size = result.archive.size();
        result.trace.push_back(row);
    }
    result.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

SolveResult solve_sequence(Model const& model, Instance const& inst, PreferenceSchedule const& schedule,
                           SolveConfig const& cfg, ReferenceBox const& box)
{
    return solve_sequence([&](std::size_t) -> Model const& { return model; }, inst, schedule, cfg, box);
}

SolveResult solve_sequence(std::vector<Model> const& submodels, Instance const& inst,
                           PreferenceSchedule const& schedule, SolveConfig const& cfg, ReferenceBox const& box)
{
    if (submodels.size() != schedule.items.size()) { throw ModelError("one submodel per preference required"); }
    return solve_sequence([&](std::size_t i) -> Model const& { return submodels[i]; }, inst, schedule, cfg, box);
}

Metrics metrics(std::span<ObjectiveVector const> points, ReferenceBox const& box)
{
    box.validate();
    for (auto const& p : points) {
        if (p.size() != box.z.size()) { throw ParetoError("point/box dimension mismatch"); }
        for (std::size_t m = 0; m < p.size(); ++m) {
            if (!(p[m] > box.z[m])) { throw ParetoError("point lies beyond the ideal point"); }
        }
    }
    return {hv_normalized(points, box, BoxPolicy::Clip), points.size()};
}

Metrics metrics(ParetoArchive const& archive, ReferenceBox const& box)
{
    auto const pts = archive.points();
    return metrics(std::span<ObjectiveVector const>(pts), box);
}

std::size_t duplicates_count(std::span<ObjectiveVector const> generated)
{
    std::set<ObjectiveVector> seen;
    std::size_t dup = 0;
    for (auto const& f : generated) {
        if (!seen.insert(f).second) { ++dup; }
    }
    return dup;
}

} // namespace nhde
