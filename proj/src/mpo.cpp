#include "nhde/mpo.hpp"

#include <algorithm>
#include <numeric>

namespace nhde {

std::string_view to_string(MpoMode mode)
{
    return mode == MpoMode::Literal ? "literal" : "archive-preserving";
}

MpoMode parse_mpo_mode(std::string_view text)
{
    if (text == "literal") { return MpoMode::Literal; }
    if (text == "archive-preserving" || text == "archive_preserving") { return MpoMode::ArchivePreserving; }
    throw ParetoError("unknown MPO mode '" + std::string(text) + "'");
}

std::vector<ObjectiveVector> SurrogateFront::objectives() const
{
    std::vector<ObjectiveVector> out;
    out.reserve(points.size() + 1);
    for (auto const& p : points) { out.push_back(p.f); }
    out.push_back(reference);
    return out;
}

SurrogateFront select_top_k(ParetoArchive const& archive, Weight const& lambda, int K, ObjectiveVector const& reference)
{
    auto const& entries = archive.entries();
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) { score[i] = ws_scalarize(entries[i].f, lambda); }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) { return score[a] < score[b]; }
        return entries[a].order < entries[b].order;
    });
    SurrogateFront out;
    out.reference = reference;
    auto const keep = std::min(order.size(), static_cast<std::size_t>(std::max(K, 0)));
    for (std::size_t i = 0; i < keep; ++i) { out.points.push_back({entries[order[i]].f, entries[order[i]].solution}); }
    return out;
}

std::vector<FrontPoint> select_top_j(std::vector<FrontPoint> candidates, Weight const& lambda, int J)
{
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> score(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) { score[i] = ws_scalarize(candidates[i].f, lambda); }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    auto const keep = std::min(order.size(), static_cast<std::size_t>(std::max(J, 0)));
    std::vector<FrontPoint> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) { out.push_back(std::move(candidates[order[i]])); }
    return out;
}

namespace {

enum class Relation { None, Left, Right, Equal };

Relation compare(ObjectiveVector const& a, ObjectiveVector const& b)
{
    if (a == b) { return Relation::Equal; }
    if (dominates(a, b)) { return Relation::Left; }
    if (dominates(b, a)) { return Relation::Right; }
    return Relation::None;
}

} // namespace

MpoStats mpo_update(ParetoArchive& archive, SurrogateFront const& surrogate, std::span<FrontPoint const> candidates,
                    MpoMode mode)
{
    for (auto const& p : surrogate.points) {
        if (!archive.contains(p.f)) { throw ParetoError("surrogate front is not a subset of the archive"); }
    }

    MpoStats stats;
    auto const nf = surrogate.points.size();
    auto const ng = candidates.size();
    std::vector<bool> front_alive(nf, true);
    std::vector<bool> cand_alive(ng, true);

    // Each unordered pair of F~ u G~ involving a candidate is compared once.
    for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t f = 0; f < nf; ++f) {
            ++stats.comparisons;
            switch (compare(surrogate.points[f].f, candidates[g].f)) {
            case Relation::Left:
            case Relation::Equal: cand_alive[g] = false; break;
            case Relation::Right: front_alive[f] = false; break;
            case Relation::None: break;
            }
        }
        for (std::size_t h = g + 1; h < ng; ++h) {
            ++stats.comparisons;
            switch (compare(candidates[g].f, candidates[h].f)) {
            case Relation::Left:
            case Relation::Equal: cand_alive[h] = false; break;
            case Relation::Right: cand_alive[g] = false; break;
            case Relation::None: break;
            }
        }
    }

    if (mode == MpoMode::Literal) {
        std::vector<ArchiveEntry> next;
        for (std::size_t f = 0; f < nf; ++f) {
            if (front_alive[f]) { next.push_back({surrogate.points[f].f, surrogate.points[f].solution, 0}); }
        }
        for (std::size_t g = 0; g < ng; ++g) {
            if (cand_alive[g]) {
                next.push_back({candidates[g].f, candidates[g].solution, 0});
                ++stats.admitted;
            }
        }
        archive.assign(std::move(next));
        return stats;
    }

    for (std::size_t g = 0; g < ng; ++g) {
        if (!cand_alive[g]) { continue; }
        ++stats.admitted;
        archive.insert(candidates[g].f, candidates[g].solution);
    }
    return stats;
}

ParetoArchive full_update_oracle(ParetoArchive const& archive, std::span<FrontPoint const> candidates)
{
    std::vector<FrontPoint> all;
    for (auto const& e : archive.entries()) { all.push_back({e.f, e.solution}); }
    all.insert(all.end(), candidates.begin(), candidates.end());
    std::vector<ArchiveEntry> kept;
    for (std::size_t i = 0; i < all.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < all.size() && keep; ++j) {
            if (i == j) { continue; }
            if (dominates(all[j].f, all[i].f) || (j < i && all[j].f == all[i].f)) { keep = false; }
        }
        if (keep) { kept.push_back({all[i].f, all[i].solution, 0}); }
    }
    ParetoArchive out;
    out.assign(std::move(kept));
    return out;
}

} // namespace nhde
