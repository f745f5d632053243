#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nhde {

enum class ProblemKind { MOTSP, MOCVRP, MOKP };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_kind(std::string_view text);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(Point2 const&, Point2 const&) = default;
};

class ProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One MOCO instance. Only the fields relevant to `kind` are populated:
//   MOTSP : coords[node][objective]
//   MOCVRP: depot, coords[customer][0], demands, capacity
//   MOKP  : weights, values[item] = (v1, v2), capacity
struct Instance {
    ProblemKind kind = ProblemKind::MOTSP;
    int n = 0;
    int M = 2;
    std::vector<std::vector<Point2>> coords;
    Point2 depot;
    std::vector<int> demands;
    std::vector<double> weights;
    std::vector<std::array<double, 2>> values;
    double capacity = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(Instance const&, Instance const&) = default;
};

// MOTSP: permutation of nodes. MOCVRP: giant customer sequence, depot returns
// implicit. MOKP: selected items in selection order.
struct Solution {
    std::vector<int> sequence;
    friend bool operator==(Solution const&, Solution const&) = default;
};

std::string encode_solution(Solution const& s);
Solution decode_solution(std::string_view text);

// Objective values in minimization sense. MOKP values are negated.
using ObjectiveVector = std::vector<double>;

// Capacity rule: the published anchors exactly, piecewise-linear in between.
double default_capacity(ProblemKind kind, int n);

Instance generate_instance(ProblemKind kind, int n, int M, std::uint64_t seed);

// Throws ProblemError when the instance violates its invariants.
void validate_instance(Instance const& inst);

ObjectiveVector evaluate(Instance const& inst, Solution const& sol);

// Objective vector in the problem's natural sense (MOKP positive).
ObjectiveVector to_reported(ProblemKind kind, ObjectiveVector f);

// Number of solution-construction slots in the policy's action space.
inline int action_count(Instance const& inst) { return inst.n; }

// Incremental construction shared by the policy rollout, heuristics and
// feasibility checks. Actions index nodes (MOTSP), customers (MOCVRP) or items
// (MOKP). A CVRP vehicle returns to the depot automatically once no unvisited
// customer fits its remaining capacity.
class ConstructionState {
public:
    explicit ConstructionState(Instance const& inst);

    // mask[a] == true means action a is infeasible.
    std::vector<bool> mask() const;
    bool feasible(int action) const;
    void apply(int action);
    bool done() const { return done_; }

    int steps() const { return static_cast<int>(sequence_.size()); }
    int first() const { return sequence_.empty() ? -1 : sequence_.front(); }
    // Last visited node/customer, or -1 when the vehicle sits at the depot.
    int last() const { return last_; }
    double remaining_capacity() const { return remaining_; }
    Solution solution() const { return Solution{sequence_}; }

private:
    void update_done();

    Instance const* inst_;
    std::vector<int> sequence_;
    std::vector<bool> used_;
    double remaining_ = 0.0;
    int last_ = -1;
    bool done_ = false;
};

std::vector<bool> feasible_actions(Instance const& inst, Solution const& partial);

enum class AugmentMode { None, Partial, Full };

std::string_view to_string(AugmentMode mode);
AugmentMode parse_augment(std::string_view text);

// Applies one of the eight unit-square symmetries (index 0..7).
Point2 square_transform(Point2 p, int which);

// Variants of an instance under coordinate symmetries. The first variant is the
// instance itself. MOKP has no augmentation.
std::vector<Instance> augment(Instance const& inst, AugmentMode mode);

} // namespace nhde
