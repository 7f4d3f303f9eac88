#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "unitax/costs.hpp"
#include "unitax/labels.hpp"

namespace unitax {

// A candidate unified label: a cross-dataset set of classes with its
// precomputed merge cost. Members are sorted by (dataset, cls).
struct MergeCandidate {
    std::vector<LabelRef> members;
    double cost = 0.0;
    double normalized_cost = 0.0;   // cost / (|members| - 1), 0 for singletons
};

struct EnumConfig {
    double tau = 0.2;       // threshold on the normalized cost
    int max_group_size = 0; // 0 means "up to one label from every dataset"
    int threads = 0;        // for the cost batches; result is thread-count independent
};

// Greedy level-wise enumeration of the pruned candidate set: all singletons
// (cost 0), then every surviving level-(n-1) set extended by one label from a
// dataset not yet represented, kept iff cost/(n-1) <= tau. Deduplicated by
// member set; output in canonical order.
std::vector<MergeCandidate> enumerate_candidates(const std::vector<LabelSpace>& spaces,
                                                 const CostProvider& provider,
                                                 const EnumConfig& config);

struct LevelStats {
    int level = 0;          // member count
    size_t count = 0;
    double min_norm = 0.0;
    double max_norm = 0.0;
    double mean_norm = 0.0;
};

std::vector<LevelStats> candidate_stats(const std::vector<MergeCandidate>& candidates);
std::string format_stats(const std::vector<LevelStats>& stats);

// Audit dump: one JSON object per line, id = position in the list.
void save_candidates(const std::vector<MergeCandidate>& candidates, std::ostream& out);
std::vector<MergeCandidate> load_candidates(std::istream& in, const std::string& origin = "<stream>");

} // namespace unitax
