#pragma once

#include <limits>
#include <string>
#include <vector>

#include "unitax/enumerate.hpp"
#include "unitax/labels.hpp"

namespace unitax {

struct SolverConfig {
    double lambda = 0.5;                                  // cardinality penalty per group
    double time_limit = std::numeric_limits<double>::infinity();   // seconds
};

struct Solution {
    Taxonomy taxonomy;
    double objective = 0.0;     // sum over selected candidates of (cost + lambda)
    double lambda = 0.0;
    bool optimal = false;
    double gap = 0.0;           // 0 for proven-optimal solutions
    std::vector<int> selected;  // candidate ids (positions in the input list), ascending
};

// Thrown when the time limit expires; carries the best incumbent found so
// far (optimal = false) and the bound gap against the best known lower bound.
class SolverTimeout : public std::runtime_error {
public:
    SolverTimeout(std::string msg, Solution incumbent)
        : std::runtime_error(std::move(msg)), incumbent(std::move(incumbent)) {}
    Solution incumbent;
};

// Exact 0-1 set-partitioning solve of
//     minimize sum_t x_t (c_t + lambda)  s.t. every label covered exactly once
// by branch-and-bound over labels in canonical order. The candidate set must
// contain every singleton (feasibility); costs may be negative. Ties are
// broken by fewer groups, then the lexicographically smallest group list.
Solution solve(const std::vector<MergeCandidate>& candidates,
               const std::vector<LabelSpace>& spaces, const SolverConfig& config);

// K=2 fast path: reduces the program to a maximum-profit bipartite matching
// (matching c1-c2 saves singleton costs + lambda - pair cost) solved with a
// shortest-augmenting-path assignment. Same objective semantics as solve().
// Requires exactly two datasets and candidates of size <= 2.
Solution solve_bipartite(const std::vector<MergeCandidate>& candidates,
                         const std::vector<LabelSpace>& spaces, const SolverConfig& config);

// Test oracle: exhaustive enumeration of every feasible exact cover, same
// tie-break as solve(). Guarded to instances with at most 14 labels.
Solution brute_force(const std::vector<MergeCandidate>& candidates,
                     const std::vector<LabelSpace>& spaces, const SolverConfig& config);

// Solution file: the taxonomy JSON plus objective/lambda/optimal/selected.
std::string solution_to_json(const Solution& s);

} // namespace unitax
