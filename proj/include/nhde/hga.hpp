#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nhde/autodiff.hpp"
#include "nhde/mpo.hpp"
#include "nhde/pareto.hpp"
#include "nhde/problems.hpp"
#include "nhde/rng.hpp"
#include "nhde/scalarization.hpp"

namespace nhde {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    ProblemKind kind = ProblemKind::MOTSP;
    int M = 2;
    int d = 16;             // embedding width
    int L = 2;              // encoder layers
    int Y = 2;              // attention heads
    double C = 10.0;        // logit clipping
    int ff_hidden = 32;     // feed-forward sublayer width
    int hyper_hidden = 32;  // hypernetwork hidden width
    bool hypernetwork = true; // decoder generated from (lambda, w); false = plain trainable decoder
    bool batch_norm = false;  // normalize over the whole batch when it holds >= 8 instances
    // Attention relations of the encoder HGA layer.
    bool node_to_point = true;
    bool point_to_node = true;
    bool point_to_point = false;

    static ModelConfig full_scale(ProblemKind kind, int M);
    static ModelConfig desk(ProblemKind kind, int M);

    void validate() const;
    int node_features() const;
    int context_dim() const;
    int head_dim() const { return d / Y; }

    friend bool operator==(ModelConfig const&, ModelConfig const&) = default;
};

// Named tensors in a fixed (lexicographic) order.
using ParamStore = std::map<std::string, ad::Matrix>;

struct Model {
    ModelConfig config;
    ParamStore params;
};

struct TensorShape {
    std::size_t rows;
    std::size_t cols;
};

// Decoder tensors in a fixed order with their shapes.
std::vector<std::pair<std::string, TensorShape>> decoder_shapes(ModelConfig const& cfg);
std::vector<std::pair<std::string, TensorShape>> parameter_shapes(ModelConfig const& cfg);
std::size_t parameter_count(ModelConfig const& cfg);
std::size_t parameter_count(ParamStore const& params);

// Uniform in [-1/sqrt(d), 1/sqrt(d)]; normalization scales start at 1 and
// shifts at 0.
Model init_model(ModelConfig const& cfg, std::uint64_t seed);

// Raw node features, one row per node (MOCVRP: customers only).
ad::Matrix node_features(Instance const& inst);
ad::Matrix depot_features(Instance const& inst);
// Front points mapped through (f - z) / (r - z); the reference point maps to ones.
ad::Matrix point_features(std::vector<ObjectiveVector> const& points_with_reference, ReferenceBox const& box);

// Parameters placed on a tape, either tracked (for gradients) or constant.
class BoundParams {
public:
    BoundParams(ad::Tape& tape, ParamStore const& params, bool track);
    ad::Var operator[](std::string const& name) const;
    std::map<std::string, ad::Var> const& vars() const { return vars_; }
    // Adds d(root)/d(param) for every tracked parameter into grads.
    void accumulate(ParamStore& grads) const;

private:
    std::map<std::string, ad::Var> vars_;
};

using DecoderParams = std::map<std::string, ad::Var>;

// Decoder tensors for a preference: generated by the hypernetwork from
// (lambda, w) or taken directly from the parameter set.
DecoderParams decoder_params(ad::Tape& tape, BoundParams const& params, ModelConfig const& cfg, Weight const& lambda,
                             DiversityFactor w);

struct PolicyInput {
    ad::Matrix nodes;                 // n x Z
    std::optional<ad::Matrix> depot;  // 1 x 2 (MOCVRP)
    ad::Matrix points;                // k x M, k >= 1
};

PolicyInput make_input(Instance const& inst, std::vector<ObjectiveVector> const& points_with_reference,
                       ReferenceBox const& box);

struct Embeddings {
    ad::Var nodes;   // all node rows; MOCVRP puts the depot in row 0
    ad::Var points;  // k x d
    ad::Var graph;   // 1 x d mean over node rows
    std::size_t action_offset = 0; // row of action 0 inside `nodes`
};

std::vector<Embeddings> encode(ad::Tape& tape, BoundParams const& params, ModelConfig const& cfg,
                               std::vector<PolicyInput> const& inputs);

enum class RolloutMode { Greedy, Sample, Forced };

struct RolloutOutput {
    std::vector<Solution> solutions;
    std::vector<double> log_probs;
    ad::Var log_prob; // S x 1 on the tape
};

// Multi-start construction: row j begins with action start_actions[j] (not
// scored), then decodes autoregressively under the feasibility mask.
RolloutOutput decode(ad::Tape& tape, DecoderParams const& dec, ModelConfig const& cfg, Instance const& inst,
                     Embeddings const& emb, std::vector<int> const& start_actions, RolloutMode mode, Rng* rng,
                     std::vector<Solution> const* forced = nullptr);

// Selection distribution for the next action of each partial construction.
// Masked actions get probability exactly 0.
std::vector<std::vector<double>> decode_step(Model const& model, Instance const& inst,
                                             std::vector<ObjectiveVector> const& points_with_reference,
                                             ReferenceBox const& box, Weight const& lambda, DiversityFactor w,
                                             std::vector<Solution> const& partials);

std::vector<int> default_starts(Instance const& inst, int starts);

// Convenience wrapper without gradient tracking.
RolloutOutput rollout(Model const& model, Instance const& inst, std::vector<ObjectiveVector> const& points_with_reference,
                      ReferenceBox const& box, Weight const& lambda, DiversityFactor w, int starts, RolloutMode mode,
                      std::uint64_t seed);

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    double max_abs_gradient = 0.0;
};

// Analytic gradient of a fixed action sequence's log-probability versus
// central finite differences on `samples` randomly chosen parameter entries.
GradCheckReport grad_check(Model const& model, Instance const& inst,
                           std::vector<ObjectiveVector> const& points_with_reference, ReferenceBox const& box,
                           Weight const& lambda, DiversityFactor w, double eps, std::size_t samples,
                           std::uint64_t seed);

} // namespace nhde
