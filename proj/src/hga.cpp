#include "nhde/hga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nhde {

using ad::Matrix;
using ad::Tape;
using ad::Var;

ModelConfig ModelConfig::full_scale(ProblemKind kind, int M)
{
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.M = M;
    cfg.d = 128;
    cfg.L = 6;
    cfg.Y = 8;
    cfg.C = 10.0;
    cfg.ff_hidden = 512;
    cfg.hyper_hidden = 256;
    return cfg;
}

ModelConfig ModelConfig::desk(ProblemKind kind, int M)
{
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.M = M;
    return cfg;
}

void ModelConfig::validate() const
{
    if (d < 1 || L < 0 || Y < 1) { throw ModelError("model widths must be positive"); }
    if (d % Y != 0) { throw ModelError("embedding width must be divisible by the head count"); }
    if (ff_hidden < 1 || hyper_hidden < 1) { throw ModelError("hidden widths must be positive"); }
    if (!(C > 0.0)) { throw ModelError("logit clip must be positive"); }
    if (M < 2 || M > 3) { throw ModelError("objective count must be 2 or 3"); }
}

int ModelConfig::node_features() const
{
    return kind == ProblemKind::MOTSP ? 2 * M : 3;
}

int ModelConfig::context_dim() const
{
    switch (kind) {
    case ProblemKind::MOTSP: return 3 * d;
    case ProblemKind::MOCVRP: return 2 * d + 1;
    case ProblemKind::MOKP: return d + 1;
    }
    return 0;
}

std::vector<std::pair<std::string, TensorShape>> decoder_shapes(ModelConfig const& cfg)
{
    auto const d = static_cast<std::size_t>(cfg.d);
    return {
        {"dec.Wq", {static_cast<std::size_t>(cfg.context_dim()), d}},
        {"dec.Wk_h", {d, d}},
        {"dec.Wv_h", {d, d}},
        {"dec.Wk_g", {d, d}},
        {"dec.Wv_g", {d, d}},
        {"dec.Wo", {d, d}},
        {"dec.bo", {1, d}},
        {"dec.Wk_final", {d, d}},
    };
}

std::vector<std::pair<std::string, TensorShape>> parameter_shapes(ModelConfig const& cfg)
{
    cfg.validate();
    auto const d = static_cast<std::size_t>(cfg.d);
    auto const ff = static_cast<std::size_t>(cfg.ff_hidden);
    std::vector<std::pair<std::string, TensorShape>> out{
        {"enc.W_node", {static_cast<std::size_t>(cfg.node_features()), d}},
        {"enc.b_node", {1, d}},
        {"enc.W_point", {static_cast<std::size_t>(cfg.M), d}},
        {"enc.b_point", {1, d}},
    };
    if (cfg.kind == ProblemKind::MOCVRP) {
        out.push_back({"enc.W_depot", {2, d}});
        out.push_back({"enc.b_depot", {1, d}});
    }
    for (int l = 0; l < cfg.L; ++l) {
        auto const p = "enc.l" + std::to_string(l) + ".";
        for (char const* side : {"h", "g"}) {
            std::string s(side);
            for (char const* w : {"Wq_", "Wk_", "Wv_", "Wo_"}) { out.push_back({p + w + s, {d, d}}); }
            out.push_back({p + "bo_" + s, {1, d}});
            for (char const* norm : {"norm1_", "norm2_"}) {
                out.push_back({p + norm + s + ".gamma", {1, d}});
                out.push_back({p + norm + s + ".beta", {1, d}});
            }
            out.push_back({p + "ff_" + s + ".W1", {d, ff}});
            out.push_back({p + "ff_" + s + ".b1", {1, ff}});
            out.push_back({p + "ff_" + s + ".W2", {ff, d}});
            out.push_back({p + "ff_" + s + ".b2", {1, d}});
        }
    }
    auto dec = decoder_shapes(cfg);
    if (cfg.hypernetwork) {
        auto const h = static_cast<std::size_t>(cfg.hyper_hidden);
        out.push_back({"hyper.W1", {static_cast<std::size_t>(cfg.M + 2), h}});
        out.push_back({"hyper.b1", {1, h}});
        out.push_back({"hyper.W2", {h, h}});
        out.push_back({"hyper.b2", {1, h}});
        for (auto const& [name, shape] : dec) {
            out.push_back({"hyper.head." + name + ".W", {h, shape.rows * shape.cols}});
            out.push_back({"hyper.head." + name + ".b", {1, shape.rows * shape.cols}});
        }
    } else {
        out.insert(out.end(), dec.begin(), dec.end());
    }
    return out;
}

std::size_t parameter_count(ModelConfig const& cfg)
{
    std::size_t total = 0;
    for (auto const& [name, shape] : parameter_shapes(cfg)) { total += shape.rows * shape.cols; }
    return total;
}

std::size_t parameter_count(ParamStore const& params)
{
    std::size_t total = 0;
    for (auto const& [name, m] : params) { total += m.size(); }
    return total;
}

Model init_model(ModelConfig const& cfg, std::uint64_t seed)
{
    Model model{cfg, {}};
    Rng rng = Rng::stream(seed, "init");
    double const bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (auto const& [name, shape] : parameter_shapes(cfg)) {
        Matrix m(shape.rows, shape.cols);
        if (name.ends_with(".gamma")) {
            std::fill(m.data.begin(), m.data.end(), 1.0);
        } else if (!name.ends_with(".beta")) {
            for (auto& v : m.data) { v = rng.uniform(-bound, bound); }
        }
        model.params.emplace(name, std::move(m));
    }
    return model;
}

Matrix node_features(Instance const& inst)
{
    auto const n = static_cast<std::size_t>(inst.n);
    switch (inst.kind) {
    case ProblemKind::MOTSP: {
        Matrix f(n, static_cast<std::size_t>(2 * inst.M));
        for (std::size_t u = 0; u < n; ++u) {
            for (int m = 0; m < inst.M; ++m) {
                f(u, 2 * m) = inst.coords[u][m].x;
                f(u, 2 * m + 1) = inst.coords[u][m].y;
            }
        }
        return f;
    }
    case ProblemKind::MOCVRP: {
        Matrix f(n, 3);
        for (std::size_t u = 0; u < n; ++u) {
            f(u, 0) = inst.coords[u][0].x;
            f(u, 1) = inst.coords[u][0].y;
            f(u, 2) = inst.demands[u] / inst.capacity;
        }
        return f;
    }
    case ProblemKind::MOKP: {
        Matrix f(n, 3);
        for (std::size_t u = 0; u < n; ++u) {
            f(u, 0) = inst.weights[u];
            f(u, 1) = inst.values[u][0];
            f(u, 2) = inst.values[u][1];
        }
        return f;
    }
    }
    return {};
}

Matrix depot_features(Instance const& inst)
{
    Matrix f(1, 2);
    f(0, 0) = inst.depot.x;
    f(0, 1) = inst.depot.y;
    return f;
}

Matrix point_features(std::vector<ObjectiveVector> const& points_with_reference, ReferenceBox const& box)
{
    if (points_with_reference.empty()) { throw ModelError("front input needs at least the reference point"); }
    auto const M = box.r.size();
    Matrix f(points_with_reference.size(), M);
    for (std::size_t i = 0; i < points_with_reference.size(); ++i) {
        auto const& p = points_with_reference[i];
        if (p.size() != M) { throw ModelError("front point dimension mismatch"); }
        for (std::size_t m = 0; m < M; ++m) { f(i, m) = (p[m] - box.z[m]) / (box.r[m] - box.z[m]); }
    }
    return f;
}

PolicyInput make_input(Instance const& inst, std::vector<ObjectiveVector> const& points_with_reference,
                       ReferenceBox const& box)
{
    PolicyInput in;
    in.nodes = node_features(inst);
    if (inst.kind == ProblemKind::MOCVRP) { in.depot = depot_features(inst); }
    in.points = point_features(points_with_reference, box);
    return in;
}

BoundParams::BoundParams(Tape& tape, ParamStore const& params, bool track)
{
    for (auto const& [name, m] : params) { vars_.emplace(name, track ? tape.variable(m) : tape.constant(m)); }
}

Var BoundParams::operator[](std::string const& name) const
{
    auto it = vars_.find(name);
    if (it == vars_.end()) { throw ModelError("missing parameter '" + name + "'"); }
    return it->second;
}

void BoundParams::accumulate(ParamStore& grads) const
{
    for (auto const& [name, var] : vars_) {
        auto const& g = var.grad();
        if (g.data.empty()) { continue; }
        auto& dst = grads[name];
        if (dst.data.empty()) { dst = Matrix(g.rows, g.cols); }
        for (std::size_t i = 0; i < g.size(); ++i) { dst.data[i] += g.data[i]; }
    }
}

DecoderParams decoder_params(Tape& tape, BoundParams const& params, ModelConfig const& cfg, Weight const& lambda,
                             DiversityFactor w)
{
    DecoderParams dec;
    if (!cfg.hypernetwork) {
        for (auto const& [name, shape] : decoder_shapes(cfg)) { dec.emplace(name, params[name]); }
        return dec;
    }
    if (lambda.size() != static_cast<std::size_t>(cfg.M)) { throw ModelError("weight dimension mismatch"); }
    Matrix x(1, static_cast<std::size_t>(cfg.M + 2));
    for (int m = 0; m < cfg.M; ++m) { x(0, m) = lambda[m]; }
    x(0, cfg.M) = w.scalar;
    x(0, cfg.M + 1) = w.indicator;
    Var in = tape.constant(std::move(x));
    Var h = ad::relu(ad::add_row(ad::matmul(in, params["hyper.W1"]), params["hyper.b1"]));
    h = ad::relu(ad::add_row(ad::matmul(h, params["hyper.W2"]), params["hyper.b2"]));
    for (auto const& [name, shape] : decoder_shapes(cfg)) {
        Var flat = ad::add_row(ad::matmul(h, params["hyper.head." + name + ".W"]), params["hyper.head." + name + ".b"]);
        dec.emplace(name, ad::reshape(flat, shape.rows, shape.cols));
    }
    return dec;
}

namespace {

Var attend(Var q, Var k, Var v, double inv_sqrt, ad::Mask const* mask = nullptr)
{
    Var scores = ad::scale(ad::matmul_nt(q, k), inv_sqrt);
    return ad::matmul(ad::softmax_rows(scores, mask), v);
}

std::vector<Var> split_heads(Var x, int heads, int dk)
{
    std::vector<Var> out;
    out.reserve(static_cast<std::size_t>(heads));
    for (int y = 0; y < heads; ++y) {
        out.push_back(heads == 1 ? x : ad::slice_cols(x, static_cast<std::size_t>(y * dk), static_cast<std::size_t>((y + 1) * dk)));
    }
    return out;
}

// Normalizes each instance on its own, or all instances jointly in batch mode.
std::vector<Var> normalize_group(std::vector<Var> const& xs, Var gamma, Var beta, bool joint)
{
    std::vector<Var> out;
    if (!joint) {
        for (auto const& x : xs) { out.push_back(ad::normalize_rows(x, gamma, beta)); }
        return out;
    }
    Var all = ad::normalize_rows(ad::concat_rows(xs), gamma, beta);
    std::size_t offset = 0;
    for (auto const& x : xs) {
        out.push_back(ad::slice_rows(all, offset, offset + x.rows()));
        offset += x.rows();
    }
    return out;
}

Var feed_forward(BoundParams const& p, std::string const& prefix, Var x)
{
    Var h = ad::relu(ad::add_row(ad::matmul(x, p[prefix + ".W1"]), p[prefix + ".b1"]));
    return ad::add_row(ad::matmul(h, p[prefix + ".W2"]), p[prefix + ".b2"]);
}

} // namespace

std::vector<Embeddings> encode(Tape& tape, BoundParams const& p, ModelConfig const& cfg,
                               std::vector<PolicyInput> const& inputs)
{
    cfg.validate();
    bool const joint = cfg.batch_norm && inputs.size() >= 8;
    int const dk = cfg.head_dim();
    double const inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

    std::vector<Var> H;
    std::vector<Var> G;
    for (auto const& in : inputs) {
        if (in.nodes.cols != static_cast<std::size_t>(cfg.node_features())) { throw ModelError("node feature width mismatch"); }
        if (in.points.rows == 0 || in.points.cols != static_cast<std::size_t>(cfg.M)) {
            throw ModelError("front feature shape mismatch");
        }
        for (double v : in.nodes.data) {
            if (!std::isfinite(v)) { throw ModelError("non-finite node feature"); }
        }
        for (double v : in.points.data) {
            if (!std::isfinite(v)) { throw ModelError("non-finite front feature"); }
        }
        Var h = ad::add_row(ad::matmul(tape.constant(in.nodes), p["enc.W_node"]), p["enc.b_node"]);
        if (cfg.kind == ProblemKind::MOCVRP) {
            if (!in.depot) { throw ModelError("MOCVRP input needs depot features"); }
            Var dep = ad::add_row(ad::matmul(tape.constant(*in.depot), p["enc.W_depot"]), p["enc.b_depot"]);
            h = ad::concat_rows({dep, h});
        }
        H.push_back(h);
        G.push_back(ad::add_row(ad::matmul(tape.constant(in.points), p["enc.W_point"]), p["enc.b_point"]));
    }

    for (int l = 0; l < cfg.L; ++l) {
        auto const pre = "enc.l" + std::to_string(l) + ".";
        std::vector<Var> h_sum;
        std::vector<Var> g_sum;
        for (std::size_t b = 0; b < inputs.size(); ++b) {
            Var qh = ad::matmul(H[b], p[pre + "Wq_h"]);
            Var kh = ad::matmul(H[b], p[pre + "Wk_h"]);
            Var vh = ad::matmul(H[b], p[pre + "Wv_h"]);
            Var qg = ad::matmul(G[b], p[pre + "Wq_g"]);
            Var kg = ad::matmul(G[b], p[pre + "Wk_g"]);
            Var vg = ad::matmul(G[b], p[pre + "Wv_g"]);
            auto qh_y = split_heads(qh, cfg.Y, dk);
            auto kh_y = split_heads(kh, cfg.Y, dk);
            auto vh_y = split_heads(vh, cfg.Y, dk);
            auto qg_y = split_heads(qg, cfg.Y, dk);
            auto kg_y = split_heads(kg, cfg.Y, dk);
            auto vg_y = split_heads(vg, cfg.Y, dk);
            std::vector<Var> h_heads;
            std::vector<Var> g_heads;
            for (int y = 0; y < cfg.Y; ++y) {
                Var hh = attend(qh_y[y], kh_y[y], vh_y[y], inv_sqrt);
                if (cfg.node_to_point) { hh = ad::add(hh, attend(qh_y[y], kg_y[y], vg_y[y], inv_sqrt)); }
                h_heads.push_back(hh);

                std::optional<Var> gg;
                if (cfg.point_to_node) { gg = attend(qg_y[y], kh_y[y], vh_y[y], inv_sqrt); }
                if (cfg.point_to_point) {
                    Var pp = attend(qg_y[y], kg_y[y], vg_y[y], inv_sqrt);
                    gg = gg ? ad::add(*gg, pp) : pp;
                }
                if (!gg) { gg = tape.constant(Matrix(G[b].rows(), static_cast<std::size_t>(dk))); }
                g_heads.push_back(*gg);
            }
            Var h_att = ad::add_row(ad::matmul(ad::concat_cols(h_heads), p[pre + "Wo_h"]), p[pre + "bo_h"]);
            Var g_att = ad::add_row(ad::matmul(ad::concat_cols(g_heads), p[pre + "Wo_g"]), p[pre + "bo_g"]);
            h_sum.push_back(ad::add(H[b], h_att));
            g_sum.push_back(ad::add(G[b], g_att));
        }
        auto h_hat = normalize_group(h_sum, p[pre + "norm1_h.gamma"], p[pre + "norm1_h.beta"], joint);
        auto g_hat = normalize_group(g_sum, p[pre + "norm1_g.gamma"], p[pre + "norm1_g.beta"], joint);
        for (std::size_t b = 0; b < inputs.size(); ++b) {
            h_sum[b] = ad::add(h_hat[b], feed_forward(p, pre + "ff_h", h_hat[b]));
            g_sum[b] = ad::add(g_hat[b], feed_forward(p, pre + "ff_g", g_hat[b]));
        }
        H = normalize_group(h_sum, p[pre + "norm2_h.gamma"], p[pre + "norm2_h.beta"], joint);
        G = normalize_group(g_sum, p[pre + "norm2_g.gamma"], p[pre + "norm2_g.beta"], joint);
    }

    std::vector<Embeddings> out;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        std::size_t const offset = cfg.kind == ProblemKind::MOCVRP ? 1 : 0;
        out.push_back({H[b], G[b], ad::mean_rows(H[b]), offset});
    }
    return out;
}

namespace {

// Per-rollout projections of the embeddings reused at every decoding step.
struct DecoderCache {
    std::vector<Var> k_node;
    std::vector<Var> v_node;
    std::vector<Var> k_point;
    std::vector<Var> v_point;
    Var k_final;
    Var graph_rows;
};

DecoderCache prepare(DecoderParams const& dec, ModelConfig const& cfg, Embeddings const& emb, std::size_t n,
                     std::size_t rows)
{
    int const dk = cfg.head_dim();
    Var act = emb.nodes;
    if (emb.action_offset != 0 || emb.nodes.rows() != n) { act = ad::slice_rows(emb.nodes, emb.action_offset, emb.action_offset + n); }
    DecoderCache c;
    c.k_node = split_heads(ad::matmul(act, dec.at("dec.Wk_h")), cfg.Y, dk);
    c.v_node = split_heads(ad::matmul(act, dec.at("dec.Wv_h")), cfg.Y, dk);
    c.k_point = split_heads(ad::matmul(emb.points, dec.at("dec.Wk_g")), cfg.Y, dk);
    c.v_point = split_heads(ad::matmul(emb.points, dec.at("dec.Wv_g")), cfg.Y, dk);
    c.k_final = ad::matmul(act, dec.at("dec.Wk_final"));
    c.graph_rows = ad::repeat_rows(emb.graph, rows);
    return c;
}

// Clipped compatibility logits for every row; mask entries set for infeasible
// actions (rows already finished are left unmasked and flagged inactive).
Var step_logits(Tape& tape, DecoderParams const& dec, ModelConfig const& cfg, Instance const& inst,
                Embeddings const& emb, DecoderCache const& cache, std::vector<ConstructionState> const& states,
                ad::Mask& mask, std::vector<std::uint8_t>& active)
{
    auto const rows = states.size();
    auto const n = static_cast<std::size_t>(inst.n);
    mask.assign(rows * n, 0);
    active.assign(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        if (states[r].done()) { continue; }
        active[r] = 1;
        auto m = states[r].mask();
        for (std::size_t a = 0; a < n; ++a) { mask[r * n + a] = m[a] ? 1 : 0; }
    }

    Var context;
    switch (inst.kind) {
    case ProblemKind::MOTSP: {
        std::vector<std::size_t> first(rows);
        std::vector<std::size_t> last(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            if (states[r].first() < 0) { throw ModelError("MOTSP decoding needs a start node"); }
            first[r] = static_cast<std::size_t>(states[r].first());
            last[r] = static_cast<std::size_t>(states[r].last());
        }
        context = ad::concat_cols({cache.graph_rows, ad::gather_rows(emb.nodes, first), ad::gather_rows(emb.nodes, last)});
        break;
    }
    case ProblemKind::MOCVRP: {
        std::vector<std::size_t> last(rows);
        Matrix cap(rows, 1);
        for (std::size_t r = 0; r < rows; ++r) {
            last[r] = states[r].last() < 0 ? 0 : static_cast<std::size_t>(states[r].last()) + emb.action_offset;
            cap(r, 0) = states[r].remaining_capacity() / inst.capacity;
        }
        context = ad::concat_cols({cache.graph_rows, ad::gather_rows(emb.nodes, last), tape.constant(std::move(cap))});
        break;
    }
    case ProblemKind::MOKP: {
        Matrix cap(rows, 1);
        for (std::size_t r = 0; r < rows; ++r) { cap(r, 0) = states[r].remaining_capacity(); }
        context = ad::concat_cols({cache.graph_rows, tape.constant(std::move(cap))});
        break;
    }
    }

    int const dk = cfg.head_dim();
    double const inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
    auto q = split_heads(ad::matmul(context, dec.at("dec.Wq")), cfg.Y, dk);
    std::vector<Var> heads;
    for (int y = 0; y < cfg.Y; ++y) {
        Var to_nodes = attend(q[y], cache.k_node[y], cache.v_node[y], inv_sqrt, &mask);
        Var to_points = attend(q[y], cache.k_point[y], cache.v_point[y], inv_sqrt);
        heads.push_back(ad::add(to_nodes, to_points));
    }
    Var glimpse = ad::add_row(ad::matmul(ad::concat_cols(heads), dec.at("dec.Wo")), dec.at("dec.bo"));
    Var compat = ad::scale(ad::matmul_nt(glimpse, cache.k_final), 1.0 / std::sqrt(static_cast<double>(cfg.d) / cfg.Y));
    return ad::scale(ad::tanh(compat), cfg.C);
}

std::vector<double> masked_probs(Matrix const& logits, ad::Mask const& mask, std::size_t r)
{
    auto const n = logits.cols;
    std::vector<double> p(n, 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
        if (mask[r * n + a] == 0) { mx = std::max(mx, logits(r, a)); }
    }
    if (!std::isfinite(mx)) { throw ModelError("all actions are masked"); }
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        if (mask[r * n + a] == 0) {
            p[a] = std::exp(logits(r, a) - mx);
            total += p[a];
        }
    }
    for (auto& v : p) { v /= total; }
    return p;
}

} // namespace

std::vector<int> default_starts(Instance const& inst, int starts)
{
    int const count = starts <= 0 ? inst.n : std::min(starts, inst.n);
    std::vector<int> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) { out[i] = i; }
    return out;
}

RolloutOutput decode(Tape& tape, DecoderParams const& dec, ModelConfig const& cfg, Instance const& inst,
                     Embeddings const& emb, std::vector<int> const& start_actions, RolloutMode mode, Rng* rng,
                     std::vector<Solution> const* forced)
{
    auto const rows = start_actions.size();
    if (rows == 0) { throw ModelError("rollout needs at least one start"); }
    if (mode == RolloutMode::Sample && rng == nullptr) { throw ModelError("sampling rollout needs a random source"); }
    if (mode == RolloutMode::Forced && (forced == nullptr || forced->size() != rows)) {
        throw ModelError("forced rollout needs one sequence per start");
    }
    auto const n = static_cast<std::size_t>(inst.n);
    std::vector<ConstructionState> states;
    states.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        states.emplace_back(inst);
        states.back().apply(start_actions[r]);
    }
    DecoderCache cache = prepare(dec, cfg, emb, n, rows);

    Var total = tape.constant(Matrix(rows, 1));
    ad::Mask mask;
    std::vector<std::uint8_t> active;
    std::vector<int> actions(rows, 0);
    while (std::any_of(states.begin(), states.end(), [](auto const& s) { return !s.done(); })) {
        Var logits = step_logits(tape, dec, cfg, inst, emb, cache, states, mask, active);
        auto const& L = logits.value();
        for (std::size_t r = 0; r < rows; ++r) {
            actions[r] = 0;
            if (active[r] == 0) { continue; }
            switch (mode) {
            case RolloutMode::Greedy: {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < n; ++a) {
                    if (mask[r * n + a] == 0 && L(r, a) > best) {
                        best = L(r, a);
                        actions[r] = static_cast<int>(a);
                    }
                }
                break;
            }
            case RolloutMode::Sample: {
                auto p = masked_probs(L, mask, r);
                double u = rng->uniform();
                int pick = -1;
                for (std::size_t a = 0; a < n; ++a) {
                    if (mask[r * n + a] != 0) { continue; }
                    pick = static_cast<int>(a);
                    u -= p[a];
                    if (u < 0.0) { break; }
                }
                actions[r] = pick;
                break;
            }
            case RolloutMode::Forced: {
                auto const& seq = (*forced)[r].sequence;
                auto const step = static_cast<std::size_t>(states[r].steps());
                if (step >= seq.size()) { throw ModelError("forced sequence ends before construction"); }
                actions[r] = seq[step];
                if (mask[r * n + static_cast<std::size_t>(actions[r])] != 0) {
                    throw ModelError("forced sequence contains an infeasible action");
                }
                break;
            }
            }
        }
        total = ad::add(total, ad::log_softmax_pick(logits, mask, actions, active));
        for (std::size_t r = 0; r < rows; ++r) {
            if (active[r] != 0) { states[r].apply(actions[r]); }
        }
    }

    RolloutOutput out;
    out.log_prob = total;
    for (std::size_t r = 0; r < rows; ++r) {
        out.solutions.push_back(states[r].solution());
        out.log_probs.push_back(total.value()(r, 0));
    }
    return out;
}

std::vector<std::vector<double>> decode_step(Model const& model, Instance const& inst,
                                             std::vector<ObjectiveVector> const& points_with_reference,
                                             ReferenceBox const& box, Weight const& lambda, DiversityFactor w,
                                             std::vector<Solution> const& partials)
{
    Tape tape;
    BoundParams p(tape, model.params, false);
    auto dec = decoder_params(tape, p, model.config, lambda, w);
    auto emb = encode(tape, p, model.config, {make_input(inst, points_with_reference, box)});
    std::vector<ConstructionState> states;
    for (auto const& partial : partials) {
        states.emplace_back(inst);
        for (int a : partial.sequence) { states.back().apply(a); }
        if (states.back().done()) { throw ModelError("all actions are masked"); }
    }
    DecoderCache cache = prepare(dec, model.config, emb[0], static_cast<std::size_t>(inst.n), partials.size());
    ad::Mask mask;
    std::vector<std::uint8_t> active;
    Var logits = step_logits(tape, dec, model.config, inst, emb[0], cache, states, mask, active);
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < partials.size(); ++r) { out.push_back(masked_probs(logits.value(), mask, r)); }
    return out;
}

RolloutOutput rollout(Model const& model, Instance const& inst, std::vector<ObjectiveVector> const& points_with_reference,
                      ReferenceBox const& box, Weight const& lambda, DiversityFactor w, int starts, RolloutMode mode,
                      std::uint64_t seed)
{
    if (starts > inst.n) { throw ModelError("more starts than nodes"); }
    Tape tape;
    BoundParams p(tape, model.params, false);
    auto dec = decoder_params(tape, p, model.config, lambda, w);
    auto emb = encode(tape, p, model.config, {make_input(inst, points_with_reference, box)});
    Rng rng = Rng::stream(seed, "rollout");
    return decode(tape, dec, model.config, inst, emb[0], default_starts(inst, starts), mode, &rng);
}

namespace {

double forced_log_prob(ParamStore const& params, ModelConfig const& cfg, Instance const& inst, PolicyInput const& input,
                       Weight const& lambda, DiversityFactor w, std::vector<int> const& starts,
                       std::vector<Solution> const& sequences)
{
    Tape tape;
    BoundParams p(tape, params, false);
    auto dec = decoder_params(tape, p, cfg, lambda, w);
    auto emb = encode(tape, p, cfg, {input});
    auto out = decode(tape, dec, cfg, inst, emb[0], starts, RolloutMode::Forced, nullptr, &sequences);
    return ad::sum(out.log_prob).scalar();
}

} // namespace

GradCheckReport grad_check(Model const& model, Instance const& inst,
                           std::vector<ObjectiveVector> const& points_with_reference, ReferenceBox const& box,
                           Weight const& lambda, DiversityFactor w, double eps, std::size_t samples,
                           std::uint64_t seed)
{
    auto const input = make_input(inst, points_with_reference, box);
    auto const starts = default_starts(inst, inst.n);
    Rng rng = Rng::stream(seed, "grad-check");

    // Fixed action sequences from a sampled rollout.
    std::vector<Solution> sequences;
    {
        Tape tape;
        BoundParams p(tape, model.params, false);
        auto dec = decoder_params(tape, p, model.config, lambda, w);
        auto emb = encode(tape, p, model.config, {input});
        sequences = decode(tape, dec, model.config, inst, emb[0], starts, RolloutMode::Sample, &rng).solutions;
    }

    ParamStore grads;
    {
        Tape tape;
        BoundParams p(tape, model.params, true);
        auto dec = decoder_params(tape, p, model.config, lambda, w);
        auto emb = encode(tape, p, model.config, {input});
        auto out = decode(tape, dec, model.config, inst, emb[0], starts, RolloutMode::Forced, nullptr, &sequences);
        Var objective = ad::sum(out.log_prob);
        tape.backward(objective);
        p.accumulate(grads);
    }

    std::vector<std::pair<std::string, std::size_t>> entries;
    for (auto const& [name, m] : model.params) {
        for (std::size_t i = 0; i < m.size(); ++i) { entries.emplace_back(name, i); }
    }

    GradCheckReport report;
    ParamStore perturbed = model.params;
    for (std::size_t s = 0; s < samples; ++s) {
        auto const& [name, idx] = entries[rng.below(entries.size())];
        double const analytic = grads.count(name) != 0 ? grads.at(name).data[idx] : 0.0;
        double& slot = perturbed.at(name).data[idx];
        double const original = slot;
        slot = original + eps;
        double const up = forced_log_prob(perturbed, model.config, inst, input, lambda, w, starts, sequences);
        slot = original - eps;
        double const down = forced_log_prob(perturbed, model.config, inst, input, lambda, w, starts, sequences);
        slot = original;
        double const numeric = (up - down) / (2.0 * eps);
        double const denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
        report.max_abs_gradient = std::max(report.max_abs_gradient, std::abs(analytic));
        ++report.checked;
    }
    return report;
}

} // namespace nhde
