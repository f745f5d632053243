#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nhde/pareto.hpp"
#include "nhde/scalarization.hpp"

namespace nhde {

enum class MpoMode { Literal, ArchivePreserving };

std::string_view to_string(MpoMode mode);
MpoMode parse_mpo_mode(std::string_view text);

struct MpoConfig {
    int K = 20;
    int J = 200;
    MpoMode mode = MpoMode::ArchivePreserving;
};

struct FrontPoint {
    ObjectiveVector f;
    Solution solution;
};

// Up to K archive points ordered by scalarized value, plus the reference point.
struct SurrogateFront {
    std::vector<FrontPoint> points;
    ObjectiveVector reference;

    std::size_t size_with_reference() const { return points.size() + 1; }
    std::vector<ObjectiveVector> objectives() const;
};

SurrogateFront select_top_k(ParetoArchive const& archive, Weight const& lambda, int K, ObjectiveVector const& reference);

// At most J candidates with the smallest scalarized value, ties by index.
std::vector<FrontPoint> select_top_j(std::vector<FrontPoint> candidates, Weight const& lambda, int J);

struct MpoStats {
    std::uint64_t comparisons = 0; // pairwise comparisons in the admission step
    std::size_t admitted = 0;      // candidates surviving admission
};

// Archive update restricted to the surrogate sets. Literal mode replaces the
// archive with the non-dominated part of F~ u G~; archive-preserving mode
// inserts the surviving candidates into the full archive.
MpoStats mpo_update(ParetoArchive& archive, SurrogateFront const& surrogate, std::span<FrontPoint const> candidates,
                    MpoMode mode);

// Exhaustive non-dominated filter of archive u candidates.
ParetoArchive full_update_oracle(ParetoArchive const& archive, std::span<FrontPoint const> candidates);

} // namespace nhde
