#include "unitax/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "json_common.hpp"

namespace unitax {

using nlohmann::json;

namespace {

constexpr double kTieEps = 1e-9;   // nodes within this of the incumbent are still explored

// dynamic bitset over flat label indices
struct Bits {
    std::vector<uint64_t> words;
    explicit Bits(int n = 0) : words((static_cast<size_t>(n) + 63) / 64, 0) {}
    void set(int i) { words[static_cast<size_t>(i) >> 6] |= uint64_t{1} << (i & 63); }
    bool test(int i) const { return (words[static_cast<size_t>(i) >> 6] >> (i & 63)) & 1; }
    bool disjoint(const Bits& other) const {
        for (size_t w = 0; w < words.size(); ++w)
            if (words[w] & other.words[w]) return false;
        return true;
    }
    void add(const Bits& other) {
        for (size_t w = 0; w < words.size(); ++w) words[w] |= other.words[w];
    }
    void remove(const Bits& other) {
        for (size_t w = 0; w < words.size(); ++w) words[w] &= ~other.words[w];
    }
};

struct Prepared {
    LabelIndexer indexer;
    int total = 0;
    double lambda = 0.0;
    std::vector<Bits> bits;             // per candidate
    std::vector<double> weight;         // c_t + lambda
    std::vector<double> share;          // weight / |t|
    std::vector<char> active;           // false for dominated duplicates
    std::vector<std::vector<int>> by_label;   // candidate ids per flat label, (share, id) ascending
};

Prepared prepare(const std::vector<MergeCandidate>& candidates,
                 const std::vector<LabelSpace>& spaces, const SolverConfig& config) {
    check_spaces(spaces);
    if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda))
        throw DataError("lambda must be finite and >= 0");

    Prepared p;
    p.indexer = LabelIndexer(spaces);
    p.total = p.indexer.total();
    p.lambda = config.lambda;
    p.bits.reserve(candidates.size());
    p.weight.reserve(candidates.size());
    p.active.assign(candidates.size(), 1);

    std::unordered_map<std::string, int> best_of_set;   // member key -> candidate id
    for (size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.members.empty()) throw DataError("candidate " + std::to_string(i) + " is empty");
        if (!std::is_sorted(c.members.begin(), c.members.end()))
            throw DataError("candidate " + std::to_string(i) + " members are not sorted");
        if (std::isnan(c.cost))
            throw DataError("candidate " + std::to_string(i) + " has an undefined cost");
        Bits b(p.total);
        std::string key;
        int prev_dataset = -1;
        for (const auto& m : c.members) {
            if (m.dataset == prev_dataset)
                throw DataError("candidate " + std::to_string(i) +
                                " holds two labels from dataset " + std::to_string(m.dataset));
            prev_dataset = m.dataset;
            b.set(p.indexer.flat(m));
            key += std::to_string(m.dataset) + ":" + std::to_string(m.cls) + ";";
        }
        p.bits.push_back(std::move(b));
        p.weight.push_back(c.cost + config.lambda);
        p.share.push_back((c.cost + config.lambda) / static_cast<double>(c.members.size()));

        // dominated duplicates: same member set, higher cost (ties keep the lower id)
        auto [it, inserted] = best_of_set.emplace(key, static_cast<int>(i));
        if (!inserted) {
            int prev = it->second;
            if (p.weight[static_cast<size_t>(prev)] <= p.weight[i]) {
                p.active[i] = 0;
            } else {
                p.active[static_cast<size_t>(prev)] = 0;
                it->second = static_cast<int>(i);
            }
        }
    }

    p.by_label.resize(static_cast<size_t>(p.total));
    std::vector<char> has_singleton(static_cast<size_t>(p.total), 0);
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!p.active[i]) continue;
        for (const auto& m : candidates[i].members) {
            p.by_label[static_cast<size_t>(p.indexer.flat(m))].push_back(static_cast<int>(i));
            if (candidates[i].members.size() == 1)
                has_singleton[static_cast<size_t>(p.indexer.flat(m))] = 1;
        }
    }
    for (int f = 0; f < p.total; ++f) {
        if (!has_singleton[static_cast<size_t>(f)]) {
            LabelRef l = p.indexer.unflat(f);
            throw DataError("infeasible: no singleton candidate for label " +
                            std::to_string(l.dataset) + ":" + std::to_string(l.cls));
        }
        auto& list = p.by_label[static_cast<size_t>(f)];
        std::sort(list.begin(), list.end(), [&](int a, int b) {
            if (p.share[static_cast<size_t>(a)] != p.share[static_cast<size_t>(b)])
                return p.share[static_cast<size_t>(a)] < p.share[static_cast<size_t>(b)];
            return a < b;
        });
    }
    return p;
}

// canonical objective: weights summed in ascending candidate-id order, so
// identical selections produce bit-identical doubles everywhere
double canonical_objective(const Prepared& p, std::vector<int>& selection) {
    std::sort(selection.begin(), selection.end());
    double obj = 0.0;
    for (int id : selection) obj += p.weight[static_cast<size_t>(id)];
    return obj;
}

struct Incumbent {
    bool valid = false;
    double objective = 0.0;
    std::vector<int> selected;                      // ascending ids
    std::vector<std::vector<LabelRef>> groups;      // canonical group list
};

std::vector<std::vector<LabelRef>> canonical_groups(const std::vector<MergeCandidate>& candidates,
                                                    const std::vector<int>& selected) {
    std::vector<std::vector<LabelRef>> groups;
    groups.reserve(selected.size());
    for (int id : selected) groups.push_back(candidates[static_cast<size_t>(id)].members);
    std::sort(groups.begin(), groups.end());
    return groups;
}

// tie-break: lower objective, then fewer groups, then lexicographically
// smallest canonical group list
void offer(Incumbent& best, const std::vector<MergeCandidate>& candidates, const Prepared& p,
           std::vector<int> selection) {
    double obj = canonical_objective(p, selection);
    if (best.valid) {
        if (obj > best.objective) return;
        if (obj == best.objective) {
            if (selection.size() > best.selected.size()) return;
            if (selection.size() == best.selected.size()) {
                auto groups = canonical_groups(candidates, selection);
                if (!(groups < best.groups)) return;
                best.objective = obj;
                best.selected = std::move(selection);
                best.groups = std::move(groups);
                return;
            }
        }
    }
    best.groups = canonical_groups(candidates, selection);
    best.objective = obj;
    best.selected = std::move(selection);
    best.valid = true;
}

Solution finish(const std::vector<MergeCandidate>& candidates,
                const std::vector<LabelSpace>& spaces, const SolverConfig& config,
                const Incumbent& best, bool optimal, double gap) {
    Solution s;
    TaxonomyDraft draft;
    draft.spaces = spaces;
    draft.groups = best.groups;
    s.taxonomy = Taxonomy::build(std::move(draft));
    s.objective = best.objective;
    s.lambda = config.lambda;
    s.optimal = optimal;
    s.gap = gap;
    s.selected = best.selected;
    (void)candidates;
    return s;
}

class BranchAndBound {
public:
    BranchAndBound(const std::vector<MergeCandidate>& candidates, const Prepared& p,
                   double time_limit)
        : cands_(candidates), p_(p), covered_(p.total) {
        deadline_valid_ = std::isfinite(time_limit);
        if (deadline_valid_)
            deadline_ = std::chrono::steady_clock::now() + std::chrono::duration_cast<
                            std::chrono::steady_clock::duration>(std::chrono::duration<double>(time_limit));
    }

    struct TimeUp {};

    // cheapest per-label share over candidates fully inside the uncovered set;
    // admissible because every completion partitions the uncovered labels
    double remaining_bound(int from) const {
        double sum = 0.0;
        for (int f = from; f < p_.total; ++f) {
            if (covered_.test(f)) continue;
            const auto& list = p_.by_label[static_cast<size_t>(f)];
            for (int id : list) {
                if (p_.bits[static_cast<size_t>(id)].disjoint(covered_)) {
                    sum += p_.share[static_cast<size_t>(id)];
                    break;
                }
            }
            // every label has a singleton, so an available candidate always exists
        }
        return sum;
    }

    void run(Incumbent& best) {
        // preselect labels whose only candidate is their singleton
        std::vector<int> path;
        double path_cost = 0.0;
        for (int f = 0; f < p_.total; ++f) {
            const auto& list = p_.by_label[static_cast<size_t>(f)];
            if (list.size() == 1) {
                covered_.set(f);
                path.push_back(list[0]);
                path_cost += p_.weight[static_cast<size_t>(list[0])];
            }
        }
        best_ = &best;
        dfs(0, path, path_cost);
    }

private:
    void dfs(int from, std::vector<int>& path, double path_cost) {
        if (deadline_valid_ && (++node_counter_ & 1023) == 0 &&
            std::chrono::steady_clock::now() > deadline_)
            throw TimeUp{};

        while (from < p_.total && covered_.test(from)) ++from;
        if (from == p_.total) {
            offer(*best_, cands_, p_, path);
            return;
        }

        const auto& list = p_.by_label[static_cast<size_t>(from)];
        for (int id : list) {
            const Bits& b = p_.bits[static_cast<size_t>(id)];
            if (!b.disjoint(covered_)) continue;
            double child_cost = path_cost + p_.weight[static_cast<size_t>(id)];
            covered_.add(b);
            double bound = child_cost + remaining_bound(from + 1);
            if (!best_->valid || bound <= best_->objective + kTieEps) {
                path.push_back(id);
                dfs(from + 1, path, child_cost);
                path.pop_back();
            }
            covered_.remove(b);
        }
    }

    const std::vector<MergeCandidate>& cands_;
    const Prepared& p_;
    Bits covered_;
    Incumbent* best_ = nullptr;
    bool deadline_valid_ = false;
    std::chrono::steady_clock::time_point deadline_;
    uint64_t node_counter_ = 0;
};

// starting incumbent: the all-singleton selection (feasible by precondition)
Incumbent singleton_incumbent(const std::vector<MergeCandidate>& candidates, const Prepared& p) {
    std::vector<int> selection;
    for (int f = 0; f < p.total; ++f) {
        for (int id : p.by_label[static_cast<size_t>(f)]) {
            if (candidates[static_cast<size_t>(id)].members.size() == 1) {
                selection.push_back(id);
                break;   // lists are (share, id)-sorted; the first singleton is the cheapest
            }
        }
    }
    Incumbent inc;
    offer(inc, candidates, p, std::move(selection));
    return inc;
}

} // namespace

Solution solve(const std::vector<MergeCandidate>& candidates,
               const std::vector<LabelSpace>& spaces, const SolverConfig& config) {
    Prepared p = prepare(candidates, spaces, config);
    Incumbent best = singleton_incumbent(candidates, p);

    BranchAndBound bnb(candidates, p, config.time_limit);
    double root_bound = 0.0;
    {
        // bound of the empty node, reported as the gap reference on timeout
        BranchAndBound fresh(candidates, p, std::numeric_limits<double>::infinity());
        root_bound = fresh.remaining_bound(0);
    }
    try {
        bnb.run(best);
    } catch (const BranchAndBound::TimeUp&) {
        Solution incumbent = finish(candidates, spaces, config, best, false,
                                    std::max(0.0, best.objective - root_bound));
        throw SolverTimeout("solver time limit exceeded", std::move(incumbent));
    }
    return finish(candidates, spaces, config, best, true, 0.0);
}

Solution brute_force(const std::vector<MergeCandidate>& candidates,
                     const std::vector<LabelSpace>& spaces, const SolverConfig& config) {
    Prepared p = prepare(candidates, spaces, config);
    if (p.total > 14)
        throw DataError("brute_force guard: " + std::to_string(p.total) + " labels (max 14)");

    Incumbent best;
    Bits covered(p.total);
    std::vector<int> path;

    // plain exhaustive recursion over exact covers, no bounding
    auto rec = [&](auto&& self, int from) -> void {
        while (from < p.total && covered.test(from)) ++from;
        if (from == p.total) {
            offer(best, candidates, p, path);
            return;
        }
        for (int id : p.by_label[static_cast<size_t>(from)]) {
            const Bits& b = p.bits[static_cast<size_t>(id)];
            if (!b.disjoint(covered)) continue;
            covered.add(b);
            path.push_back(id);
            self(self, from + 1);
            path.pop_back();
            covered.remove(b);
        }
    };
    rec(rec, 0);
    if (!best.valid) throw DataError("infeasible instance: no exact cover exists");
    return finish(candidates, spaces, config, best, true, 0.0);
}

// ---------------------------------------------------------------------------
// K = 2 fast path
// ---------------------------------------------------------------------------

namespace {

// classic O(n^3) shortest-augmenting-path assignment; minimizes total cost of
// a perfect matching on a square matrix
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            int i0 = match[static_cast<size_t>(j0)], j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                             u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<size_t>(j0)] != 0);
        do {
            int j1 = way[static_cast<size_t>(j0)];
            match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (match[static_cast<size_t>(j)] != 0) row_to_col[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

} // namespace

Solution solve_bipartite(const std::vector<MergeCandidate>& candidates,
                         const std::vector<LabelSpace>& spaces, const SolverConfig& config) {
    if (spaces.size() != 2)
        throw DataError("solve_bipartite requires exactly 2 datasets, got " +
                        std::to_string(spaces.size()));
    for (size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].members.size() > 2)
            throw DataError("solve_bipartite: candidate " + std::to_string(i) +
                            " has more than 2 members");
    Prepared p = prepare(candidates, spaces, config);

    const int n1 = spaces[0].size();
    const int n2 = spaces[1].size();
    const int ds1 = spaces[0].dataset;

    // cheapest singleton / pair candidate per slot (dominated ones are inactive)
    std::vector<int> single1(static_cast<size_t>(n1), -1), single2(static_cast<size_t>(n2), -1);
    std::vector<std::vector<int>> pair_id(static_cast<size_t>(n1), std::vector<int>(static_cast<size_t>(n2), -1));
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (!p.active[i]) continue;
        const auto& m = candidates[i].members;
        if (m.size() == 1) {
            (m[0].dataset == ds1 ? single1[static_cast<size_t>(m[0].cls)]
                                 : single2[static_cast<size_t>(m[0].cls)]) = static_cast<int>(i);
        } else {
            pair_id[static_cast<size_t>(m[0].cls)][static_cast<size_t>(m[1].cls)] = static_cast<int>(i);
        }
    }

    // profit of matching c1 with c2 relative to keeping both singletons
    const int n = std::max(n1, n2);
    std::vector<std::vector<double>> cost(static_cast<size_t>(n),
                                          std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int a = 0; a < n1; ++a) {
        for (int b = 0; b < n2; ++b) {
            int id = pair_id[static_cast<size_t>(a)][static_cast<size_t>(b)];
            if (id < 0) continue;
            double profit = p.weight[static_cast<size_t>(single1[static_cast<size_t>(a)])] +
                            p.weight[static_cast<size_t>(single2[static_cast<size_t>(b)])] -
                            p.weight[static_cast<size_t>(id)];
            if (profit > 0.0) cost[static_cast<size_t>(a)][static_cast<size_t>(b)] = -profit;
        }
    }

    auto row_to_col = min_cost_assignment(cost);

    std::vector<int> selection;
    std::vector<char> used2(static_cast<size_t>(n2), 0);
    for (int a = 0; a < n1; ++a) {
        int b = row_to_col[static_cast<size_t>(a)];
        bool merged = false;
        if (b >= 0 && b < n2 && cost[static_cast<size_t>(a)][static_cast<size_t>(b)] < 0.0) {
            selection.push_back(pair_id[static_cast<size_t>(a)][static_cast<size_t>(b)]);
            used2[static_cast<size_t>(b)] = 1;
            merged = true;
        }
        if (!merged) selection.push_back(single1[static_cast<size_t>(a)]);
    }
    for (int b = 0; b < n2; ++b)
        if (!used2[static_cast<size_t>(b)]) selection.push_back(single2[static_cast<size_t>(b)]);

    Incumbent best;
    offer(best, candidates, p, std::move(selection));
    return finish(candidates, spaces, config, best, true, 0.0);
}

std::string solution_to_json(const Solution& s) {
    json j;
    j["datasets"] = spaces_to_json_array(s.taxonomy.spaces());
    json groups = json::array();
    for (const auto& g : s.taxonomy.groups()) {
        json members = json::array();
        for (const auto& l : g) members.push_back({{"dataset", l.dataset}, {"class", l.cls}});
        groups.push_back(std::move(members));
    }
    j["groups"] = std::move(groups);
    j["objective"] = s.objective;
    j["lambda"] = s.lambda;
    j["optimal"] = s.optimal;
    j["gap"] = s.gap;
    j["selected"] = s.selected;
    return j.dump(2) + "\n";
}

} // namespace unitax
