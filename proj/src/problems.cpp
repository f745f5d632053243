#include "nhde/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nhde/rng.hpp"

namespace nhde {

std::string_view to_string(ProblemKind kind)
{
    switch (kind) {
    case ProblemKind::MOTSP: return "MOTSP";
    case ProblemKind::MOCVRP: return "MOCVRP";
    case ProblemKind::MOKP: return "MOKP";
    }
    return "?";
}

ProblemKind parse_kind(std::string_view text)
{
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (t == "MOTSP" || t == "TSP") { return ProblemKind::MOTSP; }
    if (t == "MOCVRP" || t == "CVRP") { return ProblemKind::MOCVRP; }
    if (t == "MOKP" || t == "KP") { return ProblemKind::MOKP; }
    throw ProblemError("unknown problem kind '" + std::string(text) + "'");
}

std::string encode_solution(Solution const& s)
{
    std::string out;
    for (std::size_t i = 0; i < s.sequence.size(); ++i) {
        if (i > 0) { out += '-'; }
        out += std::to_string(s.sequence[i]);
    }
    return out;
}

Solution decode_solution(std::string_view text)
{
    Solution s;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('-', pos);
        if (end == std::string_view::npos) { end = text.size(); }
        int v = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + end, v);
        if (ec != std::errc{} || ptr != text.data() + end) {
            throw ProblemError("malformed solution encoding '" + std::string(text) + "'");
        }
        s.sequence.push_back(v);
        pos = end + 1;
    }
    return s;
}

namespace {

double interpolate(std::vector<std::pair<double, double>> const& anchors, double n)
{
    if (n <= anchors.front().first) { return anchors.front().second; }
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        auto [x0, y0] = anchors[i - 1];
        auto [x1, y1] = anchors[i];
        if (n <= x1) { return y0 + (y1 - y0) * (n - x0) / (x1 - x0); }
    }
    return anchors.back().second;
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void check_kind_m(ProblemKind kind, int M)
{
    if (kind == ProblemKind::MOTSP) {
        if (M != 2 && M != 3) { throw ProblemError("MOTSP supports M = 2 or 3"); }
    } else if (M != 2) {
        throw ProblemError(std::string(to_string(kind)) + " supports only M = 2");
    }
}

} // namespace

double default_capacity(ProblemKind kind, int n)
{
    switch (kind) {
    case ProblemKind::MOCVRP:
        return interpolate({{20, 30}, {50, 40}, {100, 50}}, n);
    case ProblemKind::MOKP: {
        // Below the first anchor the capacity scales with n; it never drops to a
        // value a single item (weight < 1) could exceed.
        double cap = n < 50 ? 12.5 * n / 50.0 : interpolate({{50, 12.5}, {100, 25}, {200, 25}}, n);
        return std::max(cap, 1.0);
    }
    case ProblemKind::MOTSP: return 0.0;
    }
    return 0.0;
}

Instance generate_instance(ProblemKind kind, int n, int M, std::uint64_t seed)
{
    if (n < 2) { throw ProblemError("instance size must be at least 2"); }
    check_kind_m(kind, M);
    Rng rng = Rng::stream(seed, "instance");
    Instance inst;
    inst.kind = kind;
    inst.n = n;
    inst.M = M;
    inst.seed = seed;
    switch (kind) {
    case ProblemKind::MOTSP:
        inst.coords.assign(n, std::vector<Point2>(M));
        for (auto& node : inst.coords) {
            for (auto& p : node) {
                p.x = rng.uniform();
                p.y = rng.uniform();
            }
        }
        break;
    case ProblemKind::MOCVRP:
        inst.depot = {rng.uniform(), rng.uniform()};
        inst.coords.assign(n, std::vector<Point2>(1));
        inst.demands.resize(n);
        for (int i = 0; i < n; ++i) {
            inst.coords[i][0] = {rng.uniform(), rng.uniform()};
            inst.demands[i] = rng.integer(1, 9);
        }
        inst.capacity = default_capacity(kind, n);
        break;
    case ProblemKind::MOKP:
        inst.weights.resize(n);
        inst.values.resize(n);
        for (int i = 0; i < n; ++i) {
            inst.weights[i] = rng.uniform();
            inst.values[i] = {rng.uniform(), rng.uniform()};
        }
        inst.capacity = default_capacity(kind, n);
        break;
    }
    return inst;
}

void validate_instance(Instance const& inst)
{
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (inst.n < 2) { throw ProblemError("instance size must be at least 2"); }
    check_kind_m(inst.kind, inst.M);
    auto const n = static_cast<std::size_t>(inst.n);
    switch (inst.kind) {
    case ProblemKind::MOTSP:
        if (inst.coords.size() != n) { throw ProblemError("coords must have n entries"); }
        for (auto const& node : inst.coords) {
            if (node.size() != static_cast<std::size_t>(inst.M)) { throw ProblemError("each node needs M coordinate pairs"); }
            for (auto p : node) {
                if (!in_unit(p.x) || !in_unit(p.y)) { throw ProblemError("coordinate outside [0,1]"); }
            }
        }
        break;
    case ProblemKind::MOCVRP: {
        if (inst.coords.size() != n || inst.demands.size() != n) { throw ProblemError("coords/demands must have n entries"); }
        if (!in_unit(inst.depot.x) || !in_unit(inst.depot.y)) { throw ProblemError("depot outside [0,1]"); }
        for (auto const& c : inst.coords) {
            if (c.size() != 1 || !in_unit(c[0].x) || !in_unit(c[0].y)) { throw ProblemError("customer coordinate outside [0,1]"); }
        }
        for (int d : inst.demands) {
            if (d < 1 || d > 9) { throw ProblemError("demand outside {1..9}"); }
        }
        int max_d = *std::max_element(inst.demands.begin(), inst.demands.end());
        if (!(inst.capacity > max_d)) { throw ProblemError("capacity must exceed every demand"); }
        break;
    }
    case ProblemKind::MOKP: {
        if (inst.weights.size() != n || inst.values.size() != n) { throw ProblemError("weights/values must have n entries"); }
        for (double w : inst.weights) {
            if (!in_unit(w)) { throw ProblemError("item weight outside [0,1]"); }
        }
        for (auto const& v : inst.values) {
            if (!in_unit(v[0]) || !in_unit(v[1])) { throw ProblemError("item value outside [0,1]"); }
        }
        double max_w = *std::max_element(inst.weights.begin(), inst.weights.end());
        if (!(inst.capacity > max_w)) { throw ProblemError("capacity must exceed every item weight"); }
        break;
    }
    }
}

namespace {

// Canonical cyclic tour length: starts at node 0 and walks in the direction of
// its smaller neighbour, so every rotation/reflection of a cycle yields the
// bit-identical sum.
double canonical_cycle_length(std::vector<int> const& perm, std::vector<std::vector<Point2>> const& coords, int m)
{
    auto const n = perm.size();
    auto zero = static_cast<std::size_t>(std::find(perm.begin(), perm.end(), 0) - perm.begin());
    int next = perm[(zero + 1) % n];
    int prev = perm[(zero + n - 1) % n];
    bool forward = next <= prev;
    double total = 0.0;
    std::size_t cur = zero;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t nxt = forward ? (cur + 1) % n : (cur + n - 1) % n;
        total += dist(coords[perm[cur]][m], coords[perm[nxt]][m]);
        cur = nxt;
    }
    return total;
}

ObjectiveVector evaluate_tsp(Instance const& inst, Solution const& sol)
{
    auto const n = static_cast<std::size_t>(inst.n);
    if (sol.sequence.size() != n) { throw ProblemError("MOTSP solution must visit every node once"); }
    std::vector<bool> seen(n, false);
    for (int v : sol.sequence) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v]) { throw ProblemError("MOTSP solution repeats or skips a node"); }
        seen[v] = true;
    }
    ObjectiveVector f(inst.M);
    for (int m = 0; m < inst.M; ++m) { f[m] = canonical_cycle_length(sol.sequence, inst.coords, m); }
    return f;
}

ObjectiveVector evaluate_cvrp(Instance const& inst, Solution const& sol)
{
    auto const n = static_cast<std::size_t>(inst.n);
    if (sol.sequence.size() != n) { throw ProblemError("MOCVRP solution must visit every customer once"); }
    std::vector<bool> seen(n, false);
    for (int v : sol.sequence) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || seen[v]) { throw ProblemError("MOCVRP solution repeats or skips a customer"); }
        seen[v] = true;
    }
    std::vector<std::vector<int>> routes(1);
    double remaining = inst.capacity;
    for (int c : sol.sequence) {
        if (inst.demands[c] > remaining) {
            routes.emplace_back();
            remaining = inst.capacity;
        }
        routes.back().push_back(c);
        remaining -= inst.demands[c];
    }
    std::vector<double> lengths;
    for (auto& route : routes) {
        if (route.front() > route.back()) { std::reverse(route.begin(), route.end()); }
        Point2 pos = inst.depot;
        double len = 0.0;
        for (int c : route) {
            len += dist(pos, inst.coords[c][0]);
            pos = inst.coords[c][0];
        }
        len += dist(pos, inst.depot);
        lengths.push_back(len);
    }
    std::sort(lengths.begin(), lengths.end());
    double total = 0.0;
    for (double l : lengths) { total += l; }
    return {total, lengths.back()};
}

ObjectiveVector evaluate_kp(Instance const& inst, Solution const& sol)
{
    auto const n = static_cast<std::size_t>(inst.n);
    std::vector<int> items = sol.sequence;
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end()) { throw ProblemError("MOKP solution repeats an item"); }
    double weight = 0.0;
    ObjectiveVector f{0.0, 0.0};
    for (int i : items) {
        if (i < 0 || static_cast<std::size_t>(i) >= n) { throw ProblemError("MOKP item index out of range"); }
        weight += inst.weights[i];
        f[0] -= inst.values[i][0];
        f[1] -= inst.values[i][1];
    }
    if (weight > inst.capacity + 1e-9) { throw ProblemError("MOKP solution exceeds capacity"); }
    return f;
}

} // namespace

ObjectiveVector evaluate(Instance const& inst, Solution const& sol)
{
    switch (inst.kind) {
    case ProblemKind::MOTSP: return evaluate_tsp(inst, sol);
    case ProblemKind::MOCVRP: return evaluate_cvrp(inst, sol);
    case ProblemKind::MOKP: return evaluate_kp(inst, sol);
    }
    return {};
}

ObjectiveVector to_reported(ProblemKind kind, ObjectiveVector f)
{
    if (kind == ProblemKind::MOKP) {
        for (auto& v : f) { v = -v; }
    }
    return f;
}

ConstructionState::ConstructionState(Instance const& inst)
    : inst_(&inst), used_(static_cast<std::size_t>(inst.n), false), remaining_(inst.capacity)
{
    sequence_.reserve(static_cast<std::size_t>(inst.n));
}

bool ConstructionState::feasible(int action) const
{
    if (done_ || action < 0 || action >= inst_->n || used_[action]) { return false; }
    switch (inst_->kind) {
    case ProblemKind::MOTSP: return true;
    case ProblemKind::MOCVRP: return inst_->demands[action] <= remaining_;
    case ProblemKind::MOKP: return inst_->weights[action] <= remaining_;
    }
    return false;
}

std::vector<bool> ConstructionState::mask() const
{
    std::vector<bool> m(static_cast<std::size_t>(inst_->n));
    for (int a = 0; a < inst_->n; ++a) { m[a] = !feasible(a); }
    return m;
}

void ConstructionState::apply(int action)
{
    if (!feasible(action)) { throw ProblemError("infeasible action " + std::to_string(action)); }
    used_[action] = true;
    sequence_.push_back(action);
    last_ = action;
    if (inst_->kind == ProblemKind::MOCVRP) {
        remaining_ -= inst_->demands[action];
    } else if (inst_->kind == ProblemKind::MOKP) {
        remaining_ -= inst_->weights[action];
    }
    update_done();
}

void ConstructionState::update_done()
{
    bool any_unused = false;
    bool any_fits = false;
    for (int a = 0; a < inst_->n; ++a) {
        if (used_[a]) { continue; }
        any_unused = true;
        if (feasible(a)) {
            any_fits = true;
            break;
        }
    }
    if (!any_unused) {
        done_ = true;
        return;
    }
    if (any_fits) { return; }
    if (inst_->kind == ProblemKind::MOCVRP) {
        // Implicit return to the depot.
        remaining_ = inst_->capacity;
        last_ = -1;
    } else {
        done_ = true;
    }
}

std::vector<bool> feasible_actions(Instance const& inst, Solution const& partial)
{
    ConstructionState state(inst);
    for (int a : partial.sequence) { state.apply(a); }
    return state.mask();
}

std::string_view to_string(AugmentMode mode)
{
    switch (mode) {
    case AugmentMode::None: return "none";
    case AugmentMode::Partial: return "partial";
    case AugmentMode::Full: return "full";
    }
    return "?";
}

AugmentMode parse_augment(std::string_view text)
{
    if (text == "none") { return AugmentMode::None; }
    if (text == "partial") { return AugmentMode::Partial; }
    if (text == "full") { return AugmentMode::Full; }
    throw ProblemError("unknown augmentation mode '" + std::string(text) + "'");
}

Point2 square_transform(Point2 p, int which)
{
    auto [x, y] = p;
    switch (which) {
    case 0: return {x, y};
    case 1: return {1 - x, y};
    case 2: return {x, 1 - y};
    case 3: return {1 - x, 1 - y};
    case 4: return {y, x};
    case 5: return {1 - y, x};
    case 6: return {y, 1 - x};
    case 7: return {1 - y, 1 - x};
    default: throw ProblemError("transform index out of range");
    }
}

std::vector<Instance> augment(Instance const& inst, AugmentMode mode)
{
    if (inst.kind == ProblemKind::MOKP) { throw ProblemError("MOKP has no instance augmentation"); }
    if (mode == AugmentMode::None) { return {inst}; }

    // One transform index per coordinate group.
    std::vector<std::vector<int>> codes;
    int const groups = inst.kind == ProblemKind::MOTSP ? inst.M : 1;
    auto enumerate = [&](int base, int offset) {
        int total = 1;
        for (int g = 0; g < groups; ++g) { total *= base; }
        for (int v = 0; v < total; ++v) {
            std::vector<int> code(groups);
            int rest = v;
            for (int g = 0; g < groups; ++g) {
                code[g] = offset + rest % base;
                rest /= base;
            }
            codes.push_back(std::move(code));
        }
    };
    if (mode == AugmentMode::Full) {
        enumerate(8, 0);
    } else {
        enumerate(4, 0);
        enumerate(4, 4);
    }

    std::vector<Instance> out;
    out.reserve(codes.size());
    for (auto const& code : codes) {
        Instance v = inst;
        if (inst.kind == ProblemKind::MOTSP) {
            for (auto& node : v.coords) {
                for (int g = 0; g < groups; ++g) { node[g] = square_transform(node[g], code[g]); }
            }
        } else {
            v.depot = square_transform(v.depot, code[0]);
            for (auto& c : v.coords) { c[0] = square_transform(c[0], code[0]); }
        }
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace nhde
