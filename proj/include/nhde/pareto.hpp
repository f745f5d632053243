#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nhde/problems.hpp"

namespace nhde {

class ParetoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Hypervolume bounding box in minimization space: r is the (worse) reference
// point, z the (better) ideal point.
struct ReferenceBox {
    ObjectiveVector r;
    ObjectiveVector z;

    double volume() const;
    void validate() const;
    // Every point strictly inside (z, r) componentwise.
    bool contains(std::span<double const> f) const;
};

// Reference/ideal points for a problem and size. Published table values are
// used verbatim at the tabulated sizes; other sizes interpolate linearly.
ReferenceBox default_box(ProblemKind kind, int n, int M);

// Pareto dominance under minimization: a <= b everywhere and a < b somewhere.
bool dominates(std::span<double const> a, std::span<double const> b);

// Non-dominated subset in first-occurrence order, exact duplicates collapsed.
std::vector<ObjectiveVector> nondominated_filter(std::span<ObjectiveVector const> points);

// What to do with points that do not strictly dominate the reference point.
enum class BoxPolicy { Strict, Clip };

// Exact hypervolume for M = 2 (sorted sweep) and M = 3 (slicing over f3).
double hv_exact(std::span<ObjectiveVector const> points, std::span<double const> r, BoxPolicy policy = BoxPolicy::Strict);

// Hypervolume divided by the box volume.
double hv_normalized(std::span<ObjectiveVector const> points, ReferenceBox const& box,
                     BoxPolicy policy = BoxPolicy::Strict);

struct HvEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo estimate over uniform samples of the box.
HvEstimate hv_monte_carlo(std::span<ObjectiveVector const> points, ReferenceBox const& box, std::uint64_t samples,
                          std::uint64_t seed);

enum class InsertResult { Accepted, Dominated, Duplicate };

struct ArchiveEntry {
    ObjectiveVector f;
    Solution solution;
    std::uint64_t order = 0;
};

// Mutually non-dominated set of (objective vector, solution) pairs.
class ParetoArchive {
public:
    InsertResult insert(ObjectiveVector f, Solution solution);

    std::vector<ArchiveEntry> const& entries() const { return entries_; }
    std::vector<ObjectiveVector> points() const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::uint64_t insertions() const { return counter_; }
    bool contains(std::span<double const> f) const;
    void clear() { entries_.clear(); }

    // Replaces the contents wholesale; entries must already be mutually
    // non-dominated and duplicate free.
    void assign(std::vector<ArchiveEntry> entries);

    // Pairwise non-dominance and duplicate freedom.
    bool valid() const;

private:
    std::vector<ArchiveEntry> entries_;
    std::uint64_t counter_ = 0;
};

} // namespace nhde
