#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "unitax/errors.hpp"

namespace unitax {

// A dataset-qualified class identity. Names are carried separately (in
// LabelSpace) and are reporting-only; identity is always (dataset, cls).
struct LabelRef {
    int dataset = 0;
    int cls = 0;
    auto operator<=>(const LabelRef&) const = default;
};

// One dataset's ordered class vocabulary.
struct LabelSpace {
    int dataset = 0;
    std::string name;
    std::vector<std::string> classes;

    int size() const { return static_cast<int>(classes.size()); }
};

// Checks a list of label spaces: ascending unique dataset ids, nonempty,
// no duplicate class names within one dataset. Throws DataError.
void check_spaces(const std::vector<LabelSpace>& spaces);

// Flat indexing over the concatenated label spaces (spaces must be in
// ascending dataset-id order). Flat index = offset(dataset) + cls.
class LabelIndexer {
public:
    LabelIndexer() = default;
    explicit LabelIndexer(const std::vector<LabelSpace>& spaces);

    int total() const { return total_; }
    int dataset_count() const { return static_cast<int>(offsets_.size()); }

    // position of a dataset id within the space list, -1 if unknown
    int position(int dataset_id) const;

    int flat(const LabelRef& label) const;       // throws on unknown label
    LabelRef unflat(int flat_index) const;

    int space_size(int position) const { return sizes_[static_cast<size_t>(position)]; }

private:
    std::vector<int> ids_;      // dataset ids in order
    std::vector<int> offsets_;  // flat offset per position
    std::vector<int> sizes_;
    int total_ = 0;
};

// Per-dataset dense confidence vectors, aligned with a space list (entry i
// corresponds to spaces[i]). All values must lie in [0,1].
struct ScoreVector {
    std::vector<std::vector<double>> per_dataset;
};

// A partition draft: may violate the mapping constraints; validate_taxonomy
// reports violations instead of failing.
struct TaxonomyDraft {
    std::vector<LabelSpace> spaces;
    std::vector<std::vector<LabelRef>> groups;
};

struct Violation {
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

// Checks both mapping constraints: every label of every space is covered
// exactly once, and no group holds two labels from one dataset.
ValidationReport validate_taxonomy(const TaxonomyDraft& draft);

// A validated unified label space. Groups are canonical: members sorted by
// (dataset, cls), groups sorted by their smallest member. Immutable.
class Taxonomy {
public:
    Taxonomy() = default;   // empty; fill via build()/singletons()

    // Canonicalizes, validates (throws DataError with the report on
    // violation) and builds the reverse index.
    static Taxonomy build(TaxonomyDraft draft);

    // All-singletons partition over the given spaces.
    static Taxonomy singletons(std::vector<LabelSpace> spaces);

    const std::vector<LabelSpace>& spaces() const { return spaces_; }
    const std::vector<std::vector<LabelRef>>& groups() const { return groups_; }
    int group_count() const { return static_cast<int>(groups_.size()); }
    const LabelIndexer& indexer() const { return indexer_; }

    int group_of(const LabelRef& label) const;   // throws on unknown label
    const LabelSpace* space_for(int dataset_id) const;

    // display name for a group: unique member names joined with '|'
    std::string group_name(int group_index) const;

private:
    std::vector<LabelSpace> spaces_;
    std::vector<std::vector<LabelRef>> groups_;
    LabelIndexer indexer_;
    std::vector<int> reverse_;   // flat label index -> group index
};

// Score merge: entry for each group = arithmetic mean of the member scores.
// scores.per_dataset must align with t.spaces(). Throws DataError when a
// dataset vector is missing or has the wrong length.
std::vector<double> merge_scores(const Taxonomy& t, const ScoreVector& scores);

// Reprojection: output[c] = unified[group containing (dataset_id, c)].
std::vector<double> reproject_scores(const Taxonomy& t, const std::vector<double>& unified,
                                     int dataset_id);

// Taxonomy file round-trip (JSON; byte-stable given canonical ordering).
std::string taxonomy_to_json(const Taxonomy& t);
Taxonomy taxonomy_from_json(const std::string& text);

} // namespace unitax
