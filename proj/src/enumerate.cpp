#include "unitax/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace unitax {

using nlohmann::json;

namespace {

// canonical hashable key for a member set
std::string member_key(const std::vector<LabelRef>& members) {
    std::string key;
    for (const auto& m : members) {
        key += std::to_string(m.dataset);
        key += ':';
        key += std::to_string(m.cls);
        key += ';';
    }
    return key;
}

} // namespace

std::vector<MergeCandidate> enumerate_candidates(const std::vector<LabelSpace>& spaces,
                                                 const CostProvider& provider,
                                                 const EnumConfig& config) {
    check_spaces(spaces);
    if (config.tau < 0.0) throw DataError("tau must be >= 0");
    const int dataset_count = static_cast<int>(spaces.size());
    int max_size = config.max_group_size > 0 ? std::min(config.max_group_size, dataset_count)
                                             : dataset_count;

    std::vector<LabelRef> all_labels;
    for (const auto& s : spaces)
        for (int c = 0; c < s.size(); ++c) all_labels.push_back({s.dataset, c});

    std::vector<MergeCandidate> out;
    std::vector<MergeCandidate> level;
    for (const auto& l : all_labels) {
        MergeCandidate cand;
        cand.members = {l};
        cand.cost = 0.0;
        cand.normalized_cost = 0.0;
        level.push_back(cand);
        out.push_back(std::move(cand));
    }

    for (int n = 2; n <= max_size && !level.empty(); ++n) {
        // unique extension sets, in first-reached order
        std::vector<std::vector<LabelRef>> extensions;
        std::unordered_set<std::string> seen;
        for (const auto& prefix : level) {
            for (const auto& l : all_labels) {
                bool clash = false;
                for (const auto& m : prefix.members)
                    if (m.dataset == l.dataset) { clash = true; break; }
                if (clash) continue;
                std::vector<LabelRef> members = prefix.members;
                members.insert(std::upper_bound(members.begin(), members.end(), l), l);
                if (seen.insert(member_key(members)).second) extensions.push_back(std::move(members));
            }
        }
        auto costs = evaluate_costs(provider, extensions, config.threads);

        std::vector<MergeCandidate> next;
        const double limit = config.tau * static_cast<double>(n - 1);
        for (size_t i = 0; i < extensions.size(); ++i) {
            double c = costs[i].cost;
            if (!(c <= limit)) continue;   // NaN (undefined) fails the threshold too
            MergeCandidate cand;
            cand.members = std::move(extensions[i]);
            cand.cost = c;
            cand.normalized_cost = c / static_cast<double>(n - 1);
            next.push_back(cand);
            out.push_back(std::move(cand));
        }
        level = std::move(next);
    }

    std::sort(out.begin(), out.end(), [](const MergeCandidate& a, const MergeCandidate& b) {
        if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
        return a.members < b.members;
    });
    return out;
}

std::vector<LevelStats> candidate_stats(const std::vector<MergeCandidate>& candidates) {
    std::map<int, LevelStats> by_level;
    for (const auto& c : candidates) {
        int level = static_cast<int>(c.members.size());
        auto& s = by_level[level];
        if (s.count == 0) {
            s.level = level;
            s.min_norm = s.max_norm = c.normalized_cost;
        } else {
            s.min_norm = std::min(s.min_norm, c.normalized_cost);
            s.max_norm = std::max(s.max_norm, c.normalized_cost);
        }
        s.mean_norm += c.normalized_cost;
        ++s.count;
    }
    std::vector<LevelStats> out;
    for (auto& [lvl, s] : by_level) {
        s.mean_norm /= static_cast<double>(s.count);
        out.push_back(s);
    }
    return out;
}

std::string format_stats(const std::vector<LevelStats>& stats) {
    std::ostringstream os;
    os << "level      count   norm-cost min/mean/max\n";
    char buf[128];
    for (const auto& s : stats) {
        std::snprintf(buf, sizeof(buf), "%5d %10zu   %.6f / %.6f / %.6f\n", s.level, s.count,
                      s.min_norm, s.mean_norm, s.max_norm);
        os << buf;
    }
    return os.str();
}

void save_candidates(const std::vector<MergeCandidate>& candidates, std::ostream& out) {
    for (size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        json members = json::array();
        for (const auto& m : c.members) members.push_back({{"dataset", m.dataset}, {"class", m.cls}});
        json j{{"id", static_cast<int>(i)},
               {"members", std::move(members)},
               {"cost", c.cost},
               {"normalized_cost", c.normalized_cost}};
        out << j.dump() << "\n";
    }
}

std::vector<MergeCandidate> load_candidates(std::istream& in, const std::string& origin) {
    std::vector<MergeCandidate> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            MergeCandidate c;
            for (const auto& m : j.at("members"))
                c.members.push_back({m.at("dataset").get<int>(), m.at("class").get<int>()});
            std::sort(c.members.begin(), c.members.end());
            c.cost = j.at("cost").get<double>();
            c.normalized_cost = j.value("normalized_cost",
                                        c.members.size() > 1
                                            ? c.cost / static_cast<double>(c.members.size() - 1)
                                            : 0.0);
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": bad candidate line: " +
                            std::string(e.what()));
        }
    }
    return out;
}

} // namespace unitax
