#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nhde/hga.hpp"
#include "nhde/mpo.hpp"
#include "nhde/pareto.hpp"
#include "nhde/problems.hpp"
#include "nhde/scalarization.hpp"

namespace nhde {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Component switches for the ablation variants. Attention relations are
// toggled on ModelConfig instead.
struct Ablation {
    bool indicator = true;     // false: w pinned to (1, 0), no front points in the input
    bool decomposition = true; // false: w pinned to (0, 1), whole front as input
    bool mpo = true;           // false: only the best-reward candidate enters the archive

    void validate() const;
    friend bool operator==(Ablation const&, Ablation const&) = default;
};

// Applies the ablation to a sampled or scheduled preference.
Preference ablate_preference(Preference p, Ablation const& ablation);
// Surrogate front for a subproblem under the ablation.
SurrogateFront ablate_surrogate(ParetoArchive const& archive, Weight const& lambda, int K, ReferenceBox const& box,
                                Ablation const& ablation);

// Scalarized objective mapped through the box so that z -> 0 and r -> 1.
double normalized_g(ObjectiveVector const& f, Weight const& lambda, ReferenceBox const& box);
double reward(double g, double hv, DiversityFactor w);
// Reward of candidate f given the surrogate front points (reference excluded).
double candidate_reward(ObjectiveVector const& f, std::vector<ObjectiveVector> const& front, Weight const& lambda,
                        DiversityFactor w, ReferenceBox const& box);

struct TrainConfig {
    ProblemKind kind = ProblemKind::MOTSP;
    int M = 2;
    int n = 10;
    int B = 8;
    int N_prime = 5;
    int E = 200;
    int starts = 0; // 0 = n
    double lr = 1e-4;
    double weight_decay = 1e-6;
    double grad_clip = 0.0; // global norm; 0 = off
    MpoConfig mpo;
    Ablation ablation;
    std::uint64_t seed = 1;

    void validate() const;
};

struct MetaConfig {
    int T_m = 150;
    int N_prime = 20;
    int N_tilde = 0; // 0 = M
    int E = 100;
    int E_f = 50;
    double eps0 = 1.0;

    void validate() const;
};

class Adam {
public:
    Adam(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    // L2 decay is folded into the gradient before the moment updates.
    void step(ParamStore& params, ParamStore const& grads);
    long steps() const { return t_; }

private:
    double lr_;
    double decay_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    ParamStore m_;
    ParamStore v_;
};

struct TrainItem {
    Instance instance;
    ReferenceBox box;
    SurrogateFront front;
};

struct PolicyGradient {
    std::vector<std::vector<Solution>> solutions;
    std::vector<std::vector<ObjectiveVector>> objectives;
    std::vector<std::vector<double>> rewards;
    std::vector<std::vector<double>> advantages; // -R - b
    ParamStore grads;
    double loss = 0.0;
    double mean_reward = 0.0;
};

// Samples one multi-start rollout per item and returns the REINFORCE gradient
// with the per-instance mean baseline.
PolicyGradient policy_gradient(Model const& model, std::vector<TrainItem> const& items, Preference const& pref,
                               int starts, Rng& rng);

// Value of sum_ij a_ij * log P(pi_ij) / (B * S) for fixed sequences and
// advantages; its gradient is the policy gradient.
double surrogate_loss(Model const& model, std::vector<TrainItem> const& items, Preference const& pref,
                      std::vector<std::vector<Solution>> const& solutions,
                      std::vector<std::vector<double>> const& advantages);

double global_norm(ParamStore const& grads);
void clip_gradients(ParamStore& grads, double max_norm);

// One gradient step followed by the archive update of every item's instance.
PolicyGradient reinforce_step(Model& model, Adam& adam, std::vector<TrainItem> const& items,
                              std::vector<ParetoArchive*> const& archives, Preference const& pref,
                              TrainConfig const& cfg, Rng& rng);

// Archive update from one rollout: MPO over the top-J candidates, or only the
// best-reward candidate when MPO is ablated.
void update_archive(ParetoArchive& archive, SurrogateFront const& front, std::vector<FrontPoint> candidates,
                    Preference const& pref, ReferenceBox const& box, MpoConfig const& mpo, Ablation const& ablation);

struct TrainLogRow {
    int step = 0;
    double mean_reward = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct TrainHooks {
    int log_every = 0;
    std::function<void(TrainLogRow const&, Model const&)> on_log;
    int checkpoint_every = 0;
    std::function<void(Model const&, int step)> on_checkpoint;
};

std::vector<Instance> sample_batch(TrainConfig const& cfg, std::uint64_t step, int count);

Model train_nhde_p(TrainConfig const& cfg, ModelConfig const& model_cfg, TrainHooks const& hooks = {});
// Continues training an existing model.
void train_nhde_p(Model& model, TrainConfig const& cfg, TrainHooks const& hooks = {});

struct MetaTrace {
    std::vector<double> epsilon; // epsilon after each sampling step
};

Model meta_train_nhde_m(MetaConfig const& meta, TrainConfig const& cfg, ModelConfig const& model_cfg,
                        TrainHooks const& hooks = {}, MetaTrace* trace = nullptr);

std::vector<Model> finetune_nhde_m(Model const& meta_model, std::vector<Preference> const& prefs, int E_f,
                                   TrainConfig const& cfg);

} // namespace nhde
