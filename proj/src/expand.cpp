#include "unitax/expand.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "json_common.hpp"

namespace unitax {

using nlohmann::json;

std::vector<LabelSpace> expansion_spaces(const Taxonomy& taxonomy, const LabelSpace& new_space) {
    LabelSpace unified;
    unified.dataset = 0;
    unified.name = "unified";
    for (int g = 0; g < taxonomy.group_count(); ++g) unified.classes.push_back(taxonomy.group_name(g));
    LabelSpace fresh = new_space;
    fresh.dataset = 1;
    return {unified, fresh};
}

ExpansionResult expand(const Taxonomy& taxonomy, const LabelSpace& new_space,
                       const CostProvider& provider, const ExpansionConfig& config) {
    if (config.threshold < 0.0) throw DataError("expansion threshold must be >= 0");
    if (taxonomy.space_for(new_space.dataset))
        throw DataError("new dataset id " + std::to_string(new_space.dataset) +
                        " collides with an existing dataset");

    const int group_count = taxonomy.group_count();
    std::vector<char> taken(static_cast<size_t>(group_count), 0);   // a group absorbs at most one new class

    ExpansionResult result;
    std::vector<std::vector<LabelRef>> groups = taxonomy.groups();

    // new classes in class-id order; each greedy decision is final
    for (int c = 0; c < new_space.size(); ++c) {
        ExpansionStep step;
        step.new_label = LabelRef{new_space.dataset, c};

        int best_group = -1;
        double best_cost = kUndefinedCost;
        for (int g = 0; g < group_count; ++g) {
            if (taken[static_cast<size_t>(g)]) continue;
            // provider works on the 2-head expansion spaces: {unified group g} + {new class c}
            LabelRef members[2] = {{0, g}, {1, c}};
            double cost = provider.cost(std::span<const LabelRef>(members, 2));
            if (std::isnan(cost)) continue;                 // undefined: treated as above threshold
            if (!(cost < config.threshold)) continue;
            if (best_group < 0 || cost < best_cost) {
                best_group = g;
                best_cost = cost;
            }
        }

        if (best_group >= 0) {
            groups[static_cast<size_t>(best_group)].push_back(step.new_label);
            taken[static_cast<size_t>(best_group)] = 1;
            step.decision = "merged";
            step.group_index = best_group;
            step.cost = best_cost;
        } else {
            groups.push_back({step.new_label});
            step.decision = "appended";
        }
        result.steps.push_back(std::move(step));
    }

    TaxonomyDraft draft;
    draft.spaces = taxonomy.spaces();
    draft.spaces.push_back(new_space);
    std::sort(draft.spaces.begin(), draft.spaces.end(),
              [](const LabelSpace& a, const LabelSpace& b) { return a.dataset < b.dataset; });
    draft.groups = std::move(groups);
    result.taxonomy = Taxonomy::build(std::move(draft));
    return result;
}

MatchReport match_labels(const LabelSpace& test_space,
                         const std::vector<LabelSpace>& train_spaces_by_priority,
                         const EmbeddingTable& table) {
    if (train_spaces_by_priority.empty()) throw DataError("no training spaces given");
    constexpr double kTieTolerance = 1e-9;

    struct TrainEntry {
        LabelRef label;
        int priority;
        std::vector<double> vec;
    };
    std::vector<TrainEntry> train;
    for (size_t pr = 0; pr < train_spaces_by_priority.size(); ++pr) {
        const auto& s = train_spaces_by_priority[pr];
        for (int c = 0; c < s.size(); ++c) {
            auto vec = embed_name(table, s.classes[static_cast<size_t>(c)]);
            if (!vec) continue;   // out-of-vocabulary training labels cannot be matched to
            train.push_back({LabelRef{s.dataset, c}, static_cast<int>(pr), std::move(*vec)});
        }
    }

    MatchReport report;
    for (int c = 0; c < test_space.size(); ++c) {
        MatchEntry entry;
        entry.test_class = c;
        entry.test_name = test_space.classes[static_cast<size_t>(c)];
        auto vec = embed_name(table, entry.test_name);
        if (!vec || train.empty()) {
            report.entries.push_back(std::move(entry));
            continue;
        }

        // train is ordered by (priority, class id), so keeping the first entry
        // within the tie tolerance realizes the fixed tie-break order
        double best = std::numeric_limits<double>::infinity();
        const TrainEntry* winner = nullptr;
        for (const auto& t : train) {
            double d = cosine_distance(*vec, t.vec);
            if (d < best - kTieTolerance) {
                best = d;
                winner = &t;
            }
        }
        entry.matched = winner->label;
        entry.distance = best;
        for (const auto& t : train)
            if (cosine_distance(*vec, t.vec) <= entry.distance + kTieTolerance)
                entry.tied.push_back(t.label);
        if (entry.tied.size() <= 1) entry.tied.clear();
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string match_report_to_json(const MatchReport& report,
                                 const std::vector<LabelSpace>& train_spaces) {
    auto name_of = [&](const LabelRef& l) -> std::string {
        for (const auto& s : train_spaces)
            if (s.dataset == l.dataset) return s.classes[static_cast<size_t>(l.cls)];
        return "";
    };
    json arr = json::array();
    for (const auto& e : report.entries) {
        json j;
        j["test_class"] = e.test_class;
        j["name"] = e.test_name;
        if (e.matched) {
            j["matched"] = {{"dataset", e.matched->dataset},
                            {"class", e.matched->cls},
                            {"name", name_of(*e.matched)}};
            j["distance"] = e.distance;
            if (!e.tied.empty()) {
                json tied = json::array();
                for (const auto& t : e.tied)
                    tied.push_back({{"dataset", t.dataset}, {"class", t.cls}});
                j["tied"] = std::move(tied);
            }
        } else {
            j["unmatched"] = true;
        }
        arr.push_back(std::move(j));
    }
    json root;
    root["matches"] = std::move(arr);
    return root.dump(2) + "\n";
}

} // namespace unitax
