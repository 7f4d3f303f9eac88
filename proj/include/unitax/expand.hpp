#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unitax/costs.hpp"
#include "unitax/labels.hpp"

namespace unitax {

struct ExpansionConfig {
    double threshold = 0.05;   // max acceptable merge cost (5 AP points for the AP provider)
};

struct ExpansionStep {
    LabelRef new_label;
    std::string decision;           // "merged" or "appended"
    int group_index = -1;           // target group in the input taxonomy, -1 if appended
    double cost = kUndefinedCost;   // best cost considered (NaN when no group was evaluable)
};

struct ExpansionResult {
    Taxonomy taxonomy;
    std::vector<ExpansionStep> steps;
};

// Post-hoc expansion: each new class (in class_id order) joins the existing
// group with the lowest merge cost when that cost is under the threshold,
// otherwise it is appended as a fresh singleton. Original groups never split
// or re-merge; two new classes never join the same group (the next-best
// under-threshold group is used instead). Undefined costs (NaN) append.
//
// The provider scores pairs {unified group, new class} over a dump whose
// first head is the unified label space (one pseudo-class per group) and
// whose second head is the new dataset. Throws DataError when the new
// dataset id collides with an existing one.
ExpansionResult expand(const Taxonomy& taxonomy, const LabelSpace& new_space,
                       const CostProvider& provider, const ExpansionConfig& config);

// Builds the 2-head label spaces an expansion dump must declare: position 0
// is the unified pseudo-space ("unified", one class per group, canonical
// order), position 1 is the new dataset.
std::vector<LabelSpace> expansion_spaces(const Taxonomy& taxonomy, const LabelSpace& new_space);

// ---------------------------------------------------------------------------
// Zero-shot label matching
// ---------------------------------------------------------------------------

struct MatchEntry {
    int test_class = 0;
    std::string test_name;
    std::optional<LabelRef> matched;    // nullopt = unmatched (out of vocabulary)
    double distance = 0.0;
    std::vector<LabelRef> tied;         // labels within 1e-9 of the winner (incl. the winner)
};

struct MatchReport {
    std::vector<MatchEntry> entries;
};

// Maps every test label to the training label with minimal embedding
// distance. Ties within 1e-9 go to the earliest dataset in priority order,
// then to the smallest class id. Out-of-vocabulary test labels come back
// unmatched; training labels with no in-vocabulary words are skipped.
MatchReport match_labels(const LabelSpace& test_space,
                         const std::vector<LabelSpace>& train_spaces_by_priority,
                         const EmbeddingTable& table);

std::string match_report_to_json(const MatchReport& report,
                                 const std::vector<LabelSpace>& train_spaces);

} // namespace unitax
