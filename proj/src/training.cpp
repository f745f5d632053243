#include "nhde/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace nhde {

using ad::Matrix;
using ad::Tape;
using ad::Var;

void Ablation::validate() const
{
    if (!indicator && !decomposition) { throw TrainingError("cannot ablate both the indicator and the decomposition"); }
}

Preference ablate_preference(Preference p, Ablation const& ablation)
{
    if (!ablation.indicator) { p.w = {1.0, 0.0}; }
    if (!ablation.decomposition) {
        p.w = {0.0, 1.0};
        std::fill(p.lambda.begin(), p.lambda.end(), 1.0 / static_cast<double>(p.lambda.size()));
    }
    return p;
}

SurrogateFront ablate_surrogate(ParetoArchive const& archive, Weight const& lambda, int K, ReferenceBox const& box,
                                Ablation const& ablation)
{
    if (!ablation.indicator) { K = 0; }
    if (!ablation.decomposition) { K = static_cast<int>(archive.size()); }
    return select_top_k(archive, lambda, K, box.r);
}

double normalized_g(ObjectiveVector const& f, Weight const& lambda, ReferenceBox const& box)
{
    if (f.size() != lambda.size() || f.size() != box.r.size()) { throw TrainingError("objective dimension mismatch"); }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t m = 0; m < f.size(); ++m) {
        num += lambda[m] * (f[m] - box.z[m]);
        den += lambda[m] * (box.r[m] - box.z[m]);
    }
    return num / den;
}

double reward(double g, double hv, DiversityFactor w)
{
    return -w.scalar * g + w.indicator * hv;
}

double candidate_reward(ObjectiveVector const& f, std::vector<ObjectiveVector> const& front, Weight const& lambda,
                        DiversityFactor w, ReferenceBox const& box)
{
    double hv = 0.0;
    if (w.indicator > 0.0) {
        auto pts = front;
        pts.push_back(f);
        hv = hv_normalized(pts, box, BoxPolicy::Clip);
    }
    return reward(normalized_g(f, lambda, box), hv, w);
}

void TrainConfig::validate() const
{
    if (B < 1 || N_prime < 1 || E < 0) { throw TrainingError("B and N' must be at least 1, E non-negative"); }
    if (n < 2) { throw TrainingError("instance size must be at least 2"); }
    if (starts < 0 || starts > n) { throw TrainingError("starts must lie in [0, n]"); }
    if (!(lr > 0.0) || weight_decay < 0.0 || grad_clip < 0.0) { throw TrainingError("invalid optimizer settings"); }
    if (mpo.K < 0 || mpo.J < 1) { throw TrainingError("invalid MPO sizes"); }
    ablation.validate();
}

void MetaConfig::validate() const
{
    if (T_m < 1 || N_prime < 1 || N_tilde < 0 || E < 1 || E_f < 0) { throw TrainingError("invalid meta-training sizes"); }
    if (!(eps0 > 0.0)) { throw TrainingError("initial meta rate must be positive"); }
}

Adam::Adam(double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps)
{
}

void Adam::step(ParamStore& params, ParamStore const& grads)
{
    ++t_;
    double const c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double const c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, theta] : params) {
        auto git = grads.find(name);
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.data.empty()) {
            m = Matrix(theta.rows, theta.cols);
            v = Matrix(theta.rows, theta.cols);
        }
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double g = decay_ * theta.data[i];
            if (git != grads.end() && !git->second.data.empty()) { g += git->second.data[i]; }
            m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g;
            v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g * g;
            theta.data[i] -= lr_ * (m.data[i] / c1) / (std::sqrt(v.data[i] / c2) + eps_);
        }
    }
}

namespace {

struct BatchForward {
    std::vector<RolloutOutput> outputs;
};

BatchForward forward_batch(Tape& tape, BoundParams const& p, Model const& model, std::vector<TrainItem> const& items,
                           Preference const& pref, int starts, RolloutMode mode, Rng* rng,
                           std::vector<std::vector<Solution>> const* forced)
{
    auto dec = decoder_params(tape, p, model.config, pref.lambda, pref.w);
    std::vector<PolicyInput> inputs;
    inputs.reserve(items.size());
    for (auto const& item : items) { inputs.push_back(make_input(item.instance, item.front.objectives(), item.box)); }
    auto emb = encode(tape, p, model.config, inputs);
    BatchForward out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto start_actions = default_starts(items[i].instance, starts);
        if (forced != nullptr) {
            start_actions.clear();
            for (auto const& sol : (*forced)[i]) { start_actions.push_back(sol.sequence.at(0)); }
        }
        out.outputs.push_back(decode(tape, dec, model.config, items[i].instance, emb[i], start_actions, mode, rng,
                                     forced != nullptr ? &(*forced)[i] : nullptr));
    }
    return out;
}

} // namespace

PolicyGradient policy_gradient(Model const& model, std::vector<TrainItem> const& items, Preference const& pref,
                               int starts, Rng& rng)
{
    if (items.empty()) { throw TrainingError("empty training batch"); }
    Tape tape;
    BoundParams p(tape, model.params, true);
    auto fwd = forward_batch(tape, p, model, items, pref, starts, RolloutMode::Sample, &rng, nullptr);

    PolicyGradient pg;
    std::size_t total = 0;
    for (auto const& out : fwd.outputs) { total += out.solutions.size(); }
    double const scale = 1.0 / static_cast<double>(total);

    std::optional<Var> loss;
    double reward_sum = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto const& out = fwd.outputs[i];
        auto const front = items[i].front.objectives();
        std::vector<ObjectiveVector> front_points(front.begin(), front.end() - 1);
        std::vector<ObjectiveVector> objs;
        std::vector<double> rewards;
        for (auto const& sol : out.solutions) {
            objs.push_back(evaluate(items[i].instance, sol));
            rewards.push_back(candidate_reward(objs.back(), front_points, pref.lambda, pref.w, items[i].box));
        }
        double baseline = 0.0;
        for (double r : rewards) { baseline -= r; }
        baseline /= static_cast<double>(rewards.size());
        std::vector<double> adv;
        std::vector<double> coeff;
        for (double r : rewards) {
            adv.push_back(-r - baseline);
            coeff.push_back(adv.back() * scale);
            reward_sum += r;
        }
        Var term = ad::weighted_sum(out.log_prob, coeff);
        loss = loss ? ad::add(*loss, term) : term;
        pg.solutions.push_back(out.solutions);
        pg.objectives.push_back(std::move(objs));
        pg.rewards.push_back(std::move(rewards));
        pg.advantages.push_back(std::move(adv));
    }
    pg.loss = loss->scalar();
    pg.mean_reward = reward_sum * scale;
    if (!std::isfinite(pg.loss)) { throw TrainingError("non-finite loss"); }
    tape.backward(*loss);
    p.accumulate(pg.grads);
    return pg;
}

double surrogate_loss(Model const& model, std::vector<TrainItem> const& items, Preference const& pref,
                      std::vector<std::vector<Solution>> const& solutions,
                      std::vector<std::vector<double>> const& advantages)
{
    Tape tape;
    BoundParams p(tape, model.params, false);
    auto fwd = forward_batch(tape, p, model, items, pref, 0, RolloutMode::Forced, nullptr, &solutions);
    std::size_t total = 0;
    for (auto const& s : solutions) { total += s.size(); }
    double loss = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = 0; j < advantages[i].size(); ++j) { loss += advantages[i][j] * fwd.outputs[i].log_probs[j]; }
    }
    return loss / static_cast<double>(total);
}

double global_norm(ParamStore const& grads)
{
    double s = 0.0;
    for (auto const& [name, g] : grads) {
        for (double v : g.data) { s += v * v; }
    }
    return std::sqrt(s);
}

void clip_gradients(ParamStore& grads, double max_norm)
{
    double const norm = global_norm(grads);
    if (max_norm <= 0.0 || norm <= max_norm) { return; }
    double const f = max_norm / norm;
    for (auto& [name, g] : grads) {
        for (double& v : g.data) { v *= f; }
    }
}

void update_archive(ParetoArchive& archive, SurrogateFront const& front, std::vector<FrontPoint> candidates,
                    Preference const& pref, ReferenceBox const& box, MpoConfig const& mpo, Ablation const& ablation)
{
    if (candidates.empty()) { return; }
    if (ablation.mpo) {
        auto top = select_top_j(std::move(candidates), pref.lambda, mpo.J);
        mpo_update(archive, front, top, mpo.mode);
        return;
    }
    auto const pts = front.objectives();
    std::vector<ObjectiveVector> front_points(pts.begin(), pts.end() - 1);
    std::size_t best = 0;
    double best_reward = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double const r = candidate_reward(candidates[c].f, front_points, pref.lambda, pref.w, box);
        if (r > best_reward) {
            best_reward = r;
            best = c;
        }
    }
    archive.insert(candidates[best].f, candidates[best].solution);
}

PolicyGradient reinforce_step(Model& model, Adam& adam, std::vector<TrainItem> const& items,
                              std::vector<ParetoArchive*> const& archives, Preference const& pref,
                              TrainConfig const& cfg, Rng& rng)
{
    if (archives.size() != items.size()) { throw TrainingError("one archive per training instance required"); }
    auto pg = policy_gradient(model, items, pref, cfg.starts, rng);
    clip_gradients(pg.grads, cfg.grad_clip);
    adam.step(model.params, pg.grads);
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::vector<FrontPoint> cands;
        for (std::size_t j = 0; j < pg.solutions[i].size(); ++j) { cands.push_back({pg.objectives[i][j], pg.solutions[i][j]}); }
        update_archive(*archives[i], items[i].front, std::move(cands), pref, items[i].box, cfg.mpo, cfg.ablation);
    }
    return pg;
}

std::vector<Instance> sample_batch(TrainConfig const& cfg, std::uint64_t step, int count)
{
    Rng rng = Rng::stream(cfg.seed, "train-instances", step);
    std::vector<Instance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) { out.push_back(generate_instance(cfg.kind, cfg.n, cfg.M, rng.next())); }
    return out;
}

namespace {

std::vector<TrainItem> make_items(std::vector<Instance> const& instances, std::vector<ParetoArchive> const& archives,
                                  Preference const& pref, TrainConfig const& cfg)
{
    auto const box = default_box(cfg.kind, cfg.n, cfg.M);
    std::vector<TrainItem> items;
    items.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        items.push_back({instances[i], box, ablate_surrogate(archives[i], pref.lambda, cfg.mpo.K, box, cfg.ablation)});
    }
    return items;
}

std::vector<ParetoArchive*> pointers(std::vector<ParetoArchive>& archives)
{
    std::vector<ParetoArchive*> out;
    for (auto& a : archives) { out.push_back(&a); }
    return out;
}

Preference training_preference(TrainConfig const& cfg, std::string_view stream, std::uint64_t index)
{
    Rng rng = Rng::stream(cfg.seed, stream, index);
    return ablate_preference(sample_training_preference(rng, cfg.M), cfg.ablation);
}

void check_model(Model const& model, TrainConfig const& cfg)
{
    if (model.config.kind != cfg.kind || model.config.M != cfg.M) { throw TrainingError("model does not match the problem kind"); }
}

} // namespace

void train_nhde_p(Model& model, TrainConfig const& cfg, TrainHooks const& hooks)
{
    cfg.validate();
    check_model(model, cfg);
    Adam adam(cfg.lr, cfg.weight_decay);
    std::uint64_t update = 0;
    for (int e = 0; e < cfg.E; ++e) {
        auto instances = sample_batch(cfg, static_cast<std::uint64_t>(e), cfg.B);
        std::vector<ParetoArchive> archives(instances.size());
        TrainLogRow row{e + 1, 0.0, 0.0, 0.0};
        for (int k = 0; k < cfg.N_prime; ++k, ++update) {
            auto pref = training_preference(cfg, "weights", update);
            auto items = make_items(instances, archives, pref, cfg);
            Rng rng = Rng::stream(cfg.seed, "rollout", update);
            auto pg = reinforce_step(model, adam, items, pointers(archives), pref, cfg, rng);
            row.mean_reward += pg.mean_reward / cfg.N_prime;
            row.loss += pg.loss / cfg.N_prime;
            row.grad_norm += global_norm(pg.grads) / cfg.N_prime;
        }
        if (hooks.on_log && hooks.log_every > 0 && ((e + 1) % hooks.log_every == 0 || e + 1 == cfg.E)) {
            hooks.on_log(row, model);
        }
        if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && (e + 1) % hooks.checkpoint_every == 0) {
            hooks.on_checkpoint(model, e + 1);
        }
    }
}

Model train_nhde_p(TrainConfig const& cfg, ModelConfig const& model_cfg, TrainHooks const& hooks)
{
    Model model = init_model(model_cfg, cfg.seed);
    train_nhde_p(model, cfg, hooks);
    return model;
}

Model meta_train_nhde_m(MetaConfig const& meta, TrainConfig const& cfg, ModelConfig const& model_cfg,
                        TrainHooks const& hooks, MetaTrace* trace)
{
    meta.validate();
    cfg.validate();
    Model model = init_model(model_cfg, cfg.seed);
    check_model(model, cfg);
    int const n_tilde = meta.N_tilde == 0 ? cfg.M : meta.N_tilde;
    double eps = meta.eps0;
    std::uint64_t task = 0;
    std::uint64_t update = 0;
    int sampling_step = 0;
    for (int t = 0; t < meta.T_m; ++t) {
        std::vector<std::vector<Instance>> batches;
        std::vector<std::vector<ParetoArchive>> archives;
        for (int e = 0; e < meta.E; ++e) {
            batches.push_back(sample_batch(cfg, static_cast<std::uint64_t>(t) * meta.E + e, cfg.B));
            archives.emplace_back(batches.back().size());
        }
        for (int k = 0; k < meta.N_prime; ++k) {
            ParamStore avg;
            TrainLogRow row{++sampling_step, 0.0, 0.0, 0.0};
            for (int s = 0; s < n_tilde; ++s, ++task) {
                auto pref = training_preference(cfg, "weights", task);
                Model sub = model;
                Adam adam(cfg.lr, cfg.weight_decay);
                for (int e = 0; e < meta.E; ++e, ++update) {
                    auto items = make_items(batches[e], archives[e], pref, cfg);
                    Rng rng = Rng::stream(cfg.seed, "rollout", update);
                    auto pg = reinforce_step(sub, adam, items, pointers(archives[e]), pref, cfg, rng);
                    double const share = 1.0 / (static_cast<double>(n_tilde) * meta.E);
                    row.mean_reward += pg.mean_reward * share;
                    row.loss += pg.loss * share;
                    row.grad_norm += global_norm(pg.grads) * share;
                }
                for (auto const& [name, m] : sub.params) {
                    auto& dst = avg[name];
                    if (dst.data.empty()) { dst = Matrix(m.rows, m.cols); }
                    for (std::size_t i = 0; i < m.size(); ++i) { dst.data[i] += m.data[i] / n_tilde; }
                }
            }
            for (auto& [name, theta] : model.params) {
                auto const& a = avg.at(name);
                for (std::size_t i = 0; i < theta.size(); ++i) { theta.data[i] += eps * (a.data[i] - theta.data[i]); }
            }
            eps -= meta.eps0 / (static_cast<double>(meta.T_m) * meta.N_prime);
            if (trace != nullptr) { trace->epsilon.push_back(eps); }
            if (hooks.on_log && hooks.log_every > 0 && sampling_step % hooks.log_every == 0) { hooks.on_log(row, model); }
            if (hooks.on_checkpoint && hooks.checkpoint_every > 0 && sampling_step % hooks.checkpoint_every == 0) {
                hooks.on_checkpoint(model, sampling_step);
            }
        }
    }
    return model;
}

std::vector<Model> finetune_nhde_m(Model const& meta_model, std::vector<Preference> const& prefs, int E_f,
                                   TrainConfig const& cfg)
{
    cfg.validate();
    check_model(meta_model, cfg);
    if (E_f < 0) { throw TrainingError("fine-tuning steps must be non-negative"); }
    std::vector<std::vector<Instance>> batches;
    std::vector<std::vector<ParetoArchive>> archives;
    for (int e = 0; e < E_f; ++e) {
        Rng rng = Rng::stream(cfg.seed, "finetune-instances", static_cast<std::uint64_t>(e));
        std::vector<Instance> batch;
        for (int i = 0; i < cfg.B; ++i) { batch.push_back(generate_instance(cfg.kind, cfg.n, cfg.M, rng.next())); }
        batches.push_back(std::move(batch));
        archives.emplace_back(static_cast<std::size_t>(cfg.B));
    }
    std::vector<Model> out;
    std::uint64_t update = 0;
    for (auto const& raw : prefs) {
        auto pref = ablate_preference(raw, cfg.ablation);
        Model sub = meta_model;
        Adam adam(cfg.lr, cfg.weight_decay);
        for (int e = 0; e < E_f; ++e, ++update) {
            auto items = make_items(batches[e], archives[e], pref, cfg);
            Rng rng = Rng::stream(cfg.seed, "finetune-rollout", update);
            reinforce_step(sub, adam, items, pointers(archives[e]), pref, cfg, rng);
        }
        out.push_back(std::move(sub));
    }
    return out;
}

} // namespace nhde
