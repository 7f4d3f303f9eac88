#include "unitax/labels.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace unitax {

using nlohmann::json;

void check_spaces(const std::vector<LabelSpace>& spaces) {
    if (spaces.empty()) throw DataError("no label spaces given");
    int prev_id = -1;
    for (const auto& s : spaces) {
        if (s.dataset < 0) throw DataError("dataset id must be non-negative");
        if (s.dataset <= prev_id)
            throw DataError("dataset ids must be unique and ascending (got " +
                            std::to_string(s.dataset) + " after " + std::to_string(prev_id) + ")");
        prev_id = s.dataset;
        std::set<std::string> seen;
        for (const auto& c : s.classes)
            if (!seen.insert(c).second)
                throw DataError("dataset " + std::to_string(s.dataset) + " (" + s.name +
                                ") contains duplicated class '" + c + "'");
    }
}

LabelIndexer::LabelIndexer(const std::vector<LabelSpace>& spaces) {
    int offset = 0;
    for (const auto& s : spaces) {
        ids_.push_back(s.dataset);
        offsets_.push_back(offset);
        sizes_.push_back(s.size());
        offset += s.size();
    }
    total_ = offset;
}

int LabelIndexer::position(int dataset_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), dataset_id);
    if (it == ids_.end() || *it != dataset_id) return -1;
    return static_cast<int>(it - ids_.begin());
}

int LabelIndexer::flat(const LabelRef& label) const {
    int pos = position(label.dataset);
    if (pos < 0)
        throw DataError("unknown dataset id " + std::to_string(label.dataset));
    if (label.cls < 0 || label.cls >= sizes_[static_cast<size_t>(pos)])
        throw DataError("class " + std::to_string(label.cls) + " out of range for dataset " +
                        std::to_string(label.dataset));
    return offsets_[static_cast<size_t>(pos)] + label.cls;
}

LabelRef LabelIndexer::unflat(int flat_index) const {
    for (size_t p = 0; p < offsets_.size(); ++p) {
        if (flat_index < offsets_[p] + sizes_[p])
            return LabelRef{ids_[p], flat_index - offsets_[p]};
    }
    throw DataError("flat label index out of range");
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.message << "\n";
    return os.str();
}

namespace {

std::string label_str(const LabelRef& l) {
    return std::to_string(l.dataset) + ":" + std::to_string(l.cls);
}

void canonicalize(std::vector<std::vector<LabelRef>>& groups) {
    for (auto& g : groups) std::sort(g.begin(), g.end());
    std::sort(groups.begin(), groups.end());
}

} // namespace

ValidationReport validate_taxonomy(const TaxonomyDraft& draft) {
    ValidationReport report;
    auto add = [&](std::string msg) { report.violations.push_back({std::move(msg)}); };

    check_spaces(draft.spaces);   // structural errors are thrown, not reported
    LabelIndexer indexer(draft.spaces);

    std::vector<int> covered(static_cast<size_t>(indexer.total()), 0);
    for (size_t gi = 0; gi < draft.groups.size(); ++gi) {
        const auto& g = draft.groups[gi];
        if (g.empty()) {
            add("group " + std::to_string(gi) + " is empty");
            continue;
        }
        std::map<int, int> per_dataset;
        for (const auto& l : g) {
            int pos = indexer.position(l.dataset);
            if (pos < 0 || l.cls < 0 || l.cls >= indexer.space_size(pos)) {
                add("unknown label " + label_str(l) + " in group " + std::to_string(gi));
                continue;
            }
            ++covered[static_cast<size_t>(indexer.flat(l))];
            ++per_dataset[l.dataset];
        }
        for (const auto& [ds, n] : per_dataset)
            if (n > 1)
                add(std::to_string(n) + " labels from dataset " + std::to_string(ds) +
                    " in group " + std::to_string(gi));
    }
    for (int f = 0; f < indexer.total(); ++f) {
        LabelRef l = indexer.unflat(f);
        if (covered[static_cast<size_t>(f)] == 0)
            add("label " + label_str(l) + " is not covered by any group");
        else if (covered[static_cast<size_t>(f)] > 1)
            add("label " + label_str(l) + " covered " + std::to_string(covered[static_cast<size_t>(f)]) +
                " times");
    }
    return report;
}

Taxonomy Taxonomy::build(TaxonomyDraft draft) {
    auto report = validate_taxonomy(draft);
    if (!report.ok())
        throw DataError("invalid taxonomy:\n" + report.to_string());
    canonicalize(draft.groups);

    Taxonomy t;
    t.spaces_ = std::move(draft.spaces);
    t.groups_ = std::move(draft.groups);
    t.indexer_ = LabelIndexer(t.spaces_);
    t.reverse_.assign(static_cast<size_t>(t.indexer_.total()), -1);
    for (size_t gi = 0; gi < t.groups_.size(); ++gi)
        for (const auto& l : t.groups_[gi])
            t.reverse_[static_cast<size_t>(t.indexer_.flat(l))] = static_cast<int>(gi);
    return t;
}

Taxonomy Taxonomy::singletons(std::vector<LabelSpace> spaces) {
    TaxonomyDraft draft;
    draft.spaces = std::move(spaces);
    for (const auto& s : draft.spaces)
        for (int c = 0; c < s.size(); ++c)
            draft.groups.push_back({LabelRef{s.dataset, c}});
    return build(std::move(draft));
}

int Taxonomy::group_of(const LabelRef& label) const {
    return reverse_[static_cast<size_t>(indexer_.flat(label))];
}

const LabelSpace* Taxonomy::space_for(int dataset_id) const {
    int pos = indexer_.position(dataset_id);
    return pos < 0 ? nullptr : &spaces_[static_cast<size_t>(pos)];
}

std::string Taxonomy::group_name(int group_index) const {
    const auto& g = groups_[static_cast<size_t>(group_index)];
    std::string out;
    std::vector<std::string> seen;
    for (const auto& l : g) {
        const auto& name = space_for(l.dataset)->classes[static_cast<size_t>(l.cls)];
        if (std::find(seen.begin(), seen.end(), name) != seen.end()) continue;
        seen.push_back(name);
        if (!out.empty()) out += "|";
        out += name;
    }
    return out;
}

std::vector<double> merge_scores(const Taxonomy& t, const ScoreVector& scores) {
    const auto& spaces = t.spaces();
    if (scores.per_dataset.size() != spaces.size())
        throw DataError("score vector covers " + std::to_string(scores.per_dataset.size()) +
                        " datasets, taxonomy has " + std::to_string(spaces.size()));
    for (size_t p = 0; p < spaces.size(); ++p)
        if (scores.per_dataset[p].size() != static_cast<size_t>(spaces[p].size()))
            throw DataError("score vector for dataset " + std::to_string(spaces[p].dataset) +
                            " has wrong length");

    std::vector<double> unified(t.groups().size(), 0.0);
    for (size_t gi = 0; gi < t.groups().size(); ++gi) {
        const auto& g = t.groups()[gi];
        double sum = 0.0;
        for (const auto& l : g)
            sum += scores.per_dataset[static_cast<size_t>(t.indexer().position(l.dataset))]
                                     [static_cast<size_t>(l.cls)];
        unified[gi] = sum / static_cast<double>(g.size());
    }
    return unified;
}

std::vector<double> reproject_scores(const Taxonomy& t, const std::vector<double>& unified,
                                     int dataset_id) {
    if (unified.size() != t.groups().size())
        throw DataError("unified vector has length " + std::to_string(unified.size()) +
                        ", taxonomy has " + std::to_string(t.groups().size()) + " groups");
    const LabelSpace* space = t.space_for(dataset_id);
    if (!space) throw DataError("unknown dataset id " + std::to_string(dataset_id));
    std::vector<double> out(static_cast<size_t>(space->size()), 0.0);
    for (int c = 0; c < space->size(); ++c)
        out[static_cast<size_t>(c)] = unified[static_cast<size_t>(t.group_of({dataset_id, c}))];
    return out;
}

json spaces_to_json_array(const std::vector<LabelSpace>& spaces) {
    json arr = json::array();
    for (const auto& s : spaces)
        arr.push_back({{"id", s.dataset}, {"name", s.name}, {"classes", s.classes}});
    return arr;
}

std::vector<LabelSpace> spaces_from_json_array(const json& arr) {
    std::vector<LabelSpace> spaces;
    for (const auto& d : arr) {
        LabelSpace s;
        s.dataset = d.at("id").get<int>();
        s.name = d.value("name", std::string{});
        s.classes = d.at("classes").get<std::vector<std::string>>();
        spaces.push_back(std::move(s));
    }
    return spaces;
}

std::string taxonomy_to_json(const Taxonomy& t) {
    json j;
    j["datasets"] = spaces_to_json_array(t.spaces());
    json groups = json::array();
    for (const auto& g : t.groups()) {
        json members = json::array();
        for (const auto& l : g) members.push_back({{"dataset", l.dataset}, {"class", l.cls}});
        groups.push_back(std::move(members));
    }
    j["groups"] = std::move(groups);
    return j.dump(2) + "\n";
}

Taxonomy taxonomy_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("taxonomy JSON parse error: ") + e.what());
    }
    try {
        TaxonomyDraft draft;
        draft.spaces = spaces_from_json_array(j.at("datasets"));
        for (const auto& g : j.at("groups")) {
            std::vector<LabelRef> members;
            for (const auto& m : g)
                members.push_back({m.at("dataset").get<int>(), m.at("class").get<int>()});
            draft.groups.push_back(std::move(members));
        }
        return Taxonomy::build(std::move(draft));
    } catch (const json::exception& e) {
        throw DataError(std::string("taxonomy JSON schema error: ") + e.what());
    }
}

} // namespace unitax
