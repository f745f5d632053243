#include "nhde/pareto.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <utility>

#include "nhde/rng.hpp"

namespace nhde {

double ReferenceBox::volume() const
{
    if (r.size() != z.size()) { throw ParetoError("reference/ideal dimension mismatch"); }
    double v = 1.0;
    for (std::size_t i = 0; i < r.size(); ++i) { v *= std::abs(r[i] - z[i]); }
    return v;
}

void ReferenceBox::validate() const
{
    if (r.empty() || r.size() != z.size()) { throw ParetoError("reference/ideal dimension mismatch"); }
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > z[i])) { throw ParetoError("reference point must be worse than the ideal point"); }
    }
    if (!(volume() > 0.0)) { throw ParetoError("degenerate reference box"); }
}

bool ReferenceBox::contains(std::span<double const> f) const
{
    if (f.size() != r.size()) { return false; }
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] < r[i] && f[i] > z[i])) { return false; }
    }
    return true;
}

namespace {

// Piecewise linear through the anchors with an implicit (0, 0) anchor; beyond
// the last anchor the value scales proportionally with n.
double scaled(std::vector<std::pair<double, double>> const& anchors, double n)
{
    double x0 = 0.0;
    double y0 = 0.0;
    for (auto [x1, y1] : anchors) {
        if (n <= x1) { return y0 + (y1 - y0) * (n - x0) / (x1 - x0); }
        x0 = x1;
        y0 = y1;
    }
    return y0 * n / x0;
}

} // namespace

ReferenceBox default_box(ProblemKind kind, int n, int M)
{
    ReferenceBox box;
    switch (kind) {
    case ProblemKind::MOTSP: {
        std::vector<std::pair<double, double>> anchors{{20, 20}, {50, 35}, {100, 65}};
        if (M == 2) {
            anchors.emplace_back(150, 85);
            anchors.emplace_back(200, 115);
        }
        box.r.assign(static_cast<std::size_t>(M), scaled(anchors, n));
        box.z.assign(static_cast<std::size_t>(M), 0.0);
        break;
    }
    case ProblemKind::MOCVRP:
        box.r = {scaled({{20, 30}, {50, 45}, {100, 80}}, n), 4.0};
        box.z = {0.0, 0.0};
        break;
    case ProblemKind::MOKP: {
        // Tabulated in maximization sense; negated into minimization space.
        double const ref = scaled({{50, 5}, {100, 20}, {200, 30}}, n);
        double const ideal = scaled({{50, 30}, {100, 50}, {200, 75}}, n);
        box.r = {-ref, -ref};
        box.z = {-ideal, -ideal};
        break;
    }
    }
    return box;
}

bool dominates(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size()) { throw ParetoError("dominance on vectors of different dimension"); }
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) { return false; }
        if (a[i] < b[i]) { strictly = true; }
    }
    return strictly;
}

std::vector<ObjectiveVector> nondominated_filter(std::span<ObjectiveVector const> points)
{
    std::vector<ObjectiveVector> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < points.size() && keep; ++j) {
            if (j == i) { continue; }
            if (dominates(points[j], points[i])) { keep = false; }
            // Equal vectors: only the first occurrence survives.
            if (j < i && points[j] == points[i]) { keep = false; }
        }
        if (keep) { out.push_back(points[i]); }
    }
    return out;
}

namespace {

std::vector<ObjectiveVector> admissible(std::span<ObjectiveVector const> points, std::span<double const> r,
                                        BoxPolicy policy)
{
    std::vector<ObjectiveVector> out;
    out.reserve(points.size());
    for (auto const& p : points) {
        if (p.size() != r.size()) { throw ParetoError("point/reference dimension mismatch"); }
        bool inside = true;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(p[i])) { throw ParetoError("non-finite objective value"); }
            if (!(p[i] < r[i])) { inside = false; }
        }
        if (inside) {
            out.push_back(p);
        } else if (policy == BoxPolicy::Strict) {
            throw ParetoError("point does not dominate the reference point");
        }
    }
    return out;
}

// Area dominated in the (x, y) plane; pts sorted by x ascending (ties by y).
double area_2d(std::vector<std::pair<double, double>>& pts, double rx, double ry)
{
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double ceiling = ry;
    for (auto [x, y] : pts) {
        if (y < ceiling) {
            area += (rx - x) * (ceiling - y);
            ceiling = y;
        }
    }
    return area;
}

} // namespace

double hv_exact(std::span<ObjectiveVector const> points, std::span<double const> r, BoxPolicy policy)
{
    if (r.size() < 2 || r.size() > 3) { throw ParetoError("exact hypervolume supports M = 2 or 3"); }
    auto pts = admissible(points, r, policy);
    if (pts.empty()) { return 0.0; }

    if (r.size() == 2) {
        std::vector<std::pair<double, double>> xy;
        xy.reserve(pts.size());
        for (auto const& p : pts) { xy.emplace_back(p[0], p[1]); }
        return area_2d(xy, r[0], r[1]);
    }

    std::sort(pts.begin(), pts.end(), [](auto const& a, auto const& b) { return a[2] < b[2]; });
    double volume = 0.0;
    std::vector<std::pair<double, double>> slice;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        slice.emplace_back(pts[i][0], pts[i][1]);
        double const top = i + 1 < pts.size() ? pts[i + 1][2] : r[2];
        double const height = top - pts[i][2];
        if (height <= 0.0) { continue; }
        auto copy = slice;
        volume += area_2d(copy, r[0], r[1]) * height;
    }
    return volume;
}

double hv_normalized(std::span<ObjectiveVector const> points, ReferenceBox const& box, BoxPolicy policy)
{
    box.validate();
    if (policy == BoxPolicy::Strict) {
        for (auto const& p : points) {
            for (std::size_t i = 0; i < p.size() && i < box.z.size(); ++i) {
                if (!(p[i] > box.z[i])) { throw ParetoError("point lies beyond the ideal point"); }
            }
        }
    }
    return hv_exact(points, box.r, policy) / box.volume();
}

namespace {

// Dominance query structure: staircases over prefixes sorted by the last
// objective (a single staircase for M = 2).
class DominanceIndex {
public:
    explicit DominanceIndex(std::span<ObjectiveVector const> points) : dim_(points.empty() ? 0 : points[0].size())
    {
        std::vector<ObjectiveVector> pts(points.begin(), points.end());
        if (dim_ == 2) {
            stairs_.push_back(staircase(pts));
            return;
        }
        std::sort(pts.begin(), pts.end(), [](auto const& a, auto const& b) { return a[2] < b[2]; });
        for (std::size_t k = 0; k < pts.size(); ++k) {
            levels_.push_back(pts[k][2]);
            stairs_.push_back(staircase({pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(k + 1)}));
        }
    }

    bool dominated(std::span<double const> s) const
    {
        if (stairs_.empty()) { return false; }
        std::size_t idx = 0;
        if (dim_ == 3) {
            auto it = std::upper_bound(levels_.begin(), levels_.end(), s[2]);
            if (it == levels_.begin()) { return false; }
            idx = static_cast<std::size_t>(it - levels_.begin()) - 1;
        }
        auto const& st = stairs_[idx];
        auto it = std::upper_bound(st.begin(), st.end(), s[0], [](double v, auto const& e) { return v < e.first; });
        if (it == st.begin()) { return false; }
        return std::prev(it)->second <= s[1];
    }

private:
    // Sorted by f1 with the running minimum of f2.
    static std::vector<std::pair<double, double>> staircase(std::vector<ObjectiveVector> const& pts)
    {
        std::vector<std::pair<double, double>> st;
        st.reserve(pts.size());
        for (auto const& p : pts) { st.emplace_back(p[0], p[1]); }
        std::sort(st.begin(), st.end());
        for (std::size_t i = 1; i < st.size(); ++i) { st[i].second = std::min(st[i].second, st[i - 1].second); }
        return st;
    }

    std::size_t dim_;
    std::vector<double> levels_;
    std::vector<std::vector<std::pair<double, double>>> stairs_;
};

} // namespace

HvEstimate hv_monte_carlo(std::span<ObjectiveVector const> points, ReferenceBox const& box, std::uint64_t samples,
                          std::uint64_t seed)
{
    box.validate();
    if (samples < 1) { throw ParetoError("Monte-Carlo estimate needs at least one sample"); }
    auto const dim = box.r.size();
    if (dim < 2 || dim > 3) { throw ParetoError("Monte-Carlo hypervolume supports M = 2 or 3"); }
    for (auto const& p : points) {
        if (p.size() != dim) { throw ParetoError("point/box dimension mismatch"); }
    }
    DominanceIndex index(points);
    Rng rng = Rng::stream(seed, "hv-monte-carlo");
    std::uint64_t hits = 0;
    std::array<double, 3> s{};
    for (std::uint64_t i = 0; i < samples; ++i) {
        for (std::size_t m = 0; m < dim; ++m) { s[m] = box.z[m] + (box.r[m] - box.z[m]) * rng.uniform(); }
        if (index.dominated({s.data(), dim})) { ++hits; }
    }
    double const vol = box.volume();
    double const p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p * vol, vol * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

InsertResult ParetoArchive::insert(ObjectiveVector f, Solution solution)
{
    for (auto const& e : entries_) {
        if (e.f.size() != f.size()) { throw ParetoError("archive dimension mismatch"); }
        if (e.f == f) { return InsertResult::Duplicate; }
        if (dominates(e.f, f)) { return InsertResult::Dominated; }
    }
    std::erase_if(entries_, [&](ArchiveEntry const& e) { return dominates(f, e.f); });
    entries_.push_back({std::move(f), std::move(solution), counter_++});
    return InsertResult::Accepted;
}

std::vector<ObjectiveVector> ParetoArchive::points() const
{
    std::vector<ObjectiveVector> out;
    out.reserve(entries_.size());
    for (auto const& e : entries_) { out.push_back(e.f); }
    return out;
}

bool ParetoArchive::contains(std::span<double const> f) const
{
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](ArchiveEntry const& e) { return std::equal(e.f.begin(), e.f.end(), f.begin(), f.end()); });
}

void ParetoArchive::assign(std::vector<ArchiveEntry> entries)
{
    entries_ = std::move(entries);
    for (auto& e : entries_) { e.order = counter_++; }
}

bool ParetoArchive::valid() const
{
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        for (std::size_t j = 0; j < entries_.size(); ++j) {
            if (i == j) { continue; }
            if (entries_[i].f == entries_[j].f || dominates(entries_[i].f, entries_[j].f)) { return false; }
        }
    }
    return true;
}

} // namespace nhde
