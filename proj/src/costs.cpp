#include "unitax/costs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace unitax {

// ---------------------------------------------------------------------------
// Distortion
// ---------------------------------------------------------------------------

DistortionCost::DistortionCost(const DetectionDump& dump) : dump_(dump) {
    record_count_ = dump.records.size();
    const int total = dump.indexer.total();
    columns_.assign(static_cast<size_t>(total) * record_count_, 0.0);
    for (size_t r = 0; r < record_count_; ++r) {
        const auto& rec = dump.records[r];
        size_t flat = 0;
        for (size_t p = 0; p < rec.scores.size(); ++p)
            for (double v : rec.scores[p]) columns_[flat++ * record_count_ + r] = v;
    }
}

MergeCost DistortionCost::evaluate(std::span<const LabelRef> members) const {
    MergeCost out;
    out.members.assign(members.begin(), members.end());
    if (members.size() <= 1) {
        for (const auto& m : members) out.per_label.emplace_back(m, 0.0);
        return out;   // singleton: merged score equals the single score
    }
    if (record_count_ == 0) {
        out.cost = kUndefinedCost;
        for (const auto& m : members) out.per_label.emplace_back(m, kUndefinedCost);
        return out;
    }

    std::vector<const double*> cols;
    cols.reserve(members.size());
    for (const auto& m : members)
        cols.push_back(columns_.data() + static_cast<size_t>(dump_.indexer.flat(m)) * record_count_);

    const double inv_n = 1.0 / static_cast<double>(members.size());
    std::vector<double> acc(members.size(), 0.0);
    for (size_t r = 0; r < record_count_; ++r) {
        double mean = 0.0;
        for (const double* c : cols) mean += c[r];
        mean *= inv_n;
        for (size_t i = 0; i < cols.size(); ++i) {
            double d = cols[i][r] - mean;
            acc[i] += d * d;
        }
    }
    double cost = 0.0;
    for (size_t i = 0; i < members.size(); ++i) {
        double contrib = acc[i] / static_cast<double>(record_count_);
        out.per_label.emplace_back(members[i], contrib);
        cost += contrib;
    }
    out.cost = cost * inv_n;
    return out;
}

// ---------------------------------------------------------------------------
// AP delta
// ---------------------------------------------------------------------------

ApDeltaCost::ApDeltaCost(const DetectionDump& dump, std::vector<GroundTruthSet> ground_truth,
                         std::vector<double> iou_thresholds)
    : dump_(dump), thresholds_(std::move(iou_thresholds)) {
    gts_.resize(dump.spaces.size());
    std::vector<char> have(dump.spaces.size(), 0);
    for (auto& gt : ground_truth) {
        int pos = dump.indexer.position(gt.dataset);
        if (pos < 0)
            throw DataError("ground truth for dataset " + std::to_string(gt.dataset) +
                            " does not match any dump dataset");
        gts_[static_cast<size_t>(pos)] = std::move(gt);
        have[static_cast<size_t>(pos)] = 1;
    }
    for (size_t p = 0; p < have.size(); ++p) gts_[p].dataset = dump.spaces[p].dataset;
    have_.assign(have.begin(), have.end());

    records_of_.resize(dump.spaces.size());
    for (size_t r = 0; r < dump.records.size(); ++r) {
        int pos = dump.indexer.position(dump.records[r].source_dataset);
        records_of_[static_cast<size_t>(pos)].push_back(r);
    }

    // baseline AP of every unmerged column, reused across candidates
    baseline_.assign(static_cast<size_t>(dump.indexer.total()), kUndefinedCost);
    for (size_t p = 0; p < dump.spaces.size(); ++p) {
        if (!have_[p]) continue;
        for (int c = 0; c < dump.spaces[p].size(); ++c) {
            LabelRef l{dump.spaces[p].dataset, c};
            baseline_[static_cast<size_t>(dump.indexer.flat(l))] = column_ap(l, {&l, 1});
        }
    }
}

double ApDeltaCost::baseline_ap(const LabelRef& label) const {
    return baseline_[static_cast<size_t>(dump_.indexer.flat(label))];
}

// AP of the merged column of `members`, evaluated for `label`'s class against
// its own dataset's validation records and ground truth.
double ApDeltaCost::column_ap(const LabelRef& label, std::span<const LabelRef> members) const {
    int pos = dump_.indexer.position(label.dataset);
    if (pos < 0) throw DataError("label dataset not in dump header");
    if (!have_[static_cast<size_t>(pos)])
        throw DataError("no ground truth for dataset " + std::to_string(label.dataset));
    const auto& gt = gts_[static_cast<size_t>(pos)];

    std::vector<ScoredBox> dets;
    dets.reserve(records_of_[static_cast<size_t>(pos)].size());
    const double inv_n = 1.0 / static_cast<double>(members.size());
    for (size_t r : records_of_[static_cast<size_t>(pos)]) {
        const auto& rec = dump_.records[r];
        double sum = 0.0;
        for (const auto& m : members)
            sum += rec.scores[static_cast<size_t>(dump_.indexer.position(m.dataset))]
                             [static_cast<size_t>(m.cls)];
        dets.push_back({sum * inv_n, rec.image_id, rec.box});
    }
    return average_precision(dets, gt, label.cls, thresholds_);
}

MergeCost ApDeltaCost::evaluate(std::span<const LabelRef> members) const {
    MergeCost out;
    out.members.assign(members.begin(), members.end());
    if (members.size() <= 1) {
        for (const auto& m : members) out.per_label.emplace_back(m, 0.0);
        return out;
    }
    double cost = 0.0;
    for (const auto& m : members) {
        int pos = dump_.indexer.position(m.dataset);
        if (pos < 0 || !have_[static_cast<size_t>(pos)])
            throw DataError("no ground truth for dataset " + std::to_string(m.dataset));
        double before = baseline_[static_cast<size_t>(dump_.indexer.flat(m))];
        double contrib = 0.0;
        if (!std::isnan(before)) {
            double after = column_ap(m, members);
            contrib = (before - after) / static_cast<double>(dump_.spaces[static_cast<size_t>(pos)].size());
        }
        // classes with zero GT have undefined AP and contribute 0
        out.per_label.emplace_back(m, contrib);
        cost += contrib;
    }
    out.cost = cost;
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

EmbeddingTable load_embeddings(std::istream& in, const std::string& origin) {
    EmbeddingTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<float> vec;
        double v;
        while (ls >> v) vec.push_back(static_cast<float>(v));
        if (vec.empty())
            throw DataError(origin + ":" + std::to_string(lineno) + ": no vector components");
        if (table.dim == 0) table.dim = static_cast<int>(vec.size());
        if (static_cast<int>(vec.size()) != table.dim)
            throw DataError(origin + ":" + std::to_string(lineno) + ": dimension mismatch (" +
                            std::to_string(vec.size()) + " vs " + std::to_string(table.dim) + ")");
        double norm = 0.0;
        for (float x : vec) norm += static_cast<double>(x) * static_cast<double>(x);
        if (norm == 0.0)
            throw DataError(origin + ":" + std::to_string(lineno) + ": zero-norm vector for '" +
                            token + "'");
        table.vectors.emplace(std::move(token), std::move(vec));   // first occurrence wins
    }
    return table;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path);
    return load_embeddings(in, path);
}

namespace {

std::vector<std::string> tokenize_name(const std::string& name) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

} // namespace

std::optional<std::vector<double>> embed_name(const EmbeddingTable& table, const std::string& name,
                                              std::vector<std::string>* missing) {
    auto words = tokenize_name(name);
    std::vector<double> sum(static_cast<size_t>(table.dim), 0.0);
    int hits = 0;
    for (const auto& w : words) {
        auto it = table.vectors.find(w);
        if (it == table.vectors.end()) {
            if (missing) missing->push_back(w);
            continue;
        }
        for (size_t i = 0; i < it->second.size(); ++i) sum[i] += static_cast<double>(it->second[i]);
        ++hits;
    }
    if (hits == 0) return std::nullopt;
    double norm = 0.0;
    for (double& v : sum) {
        v /= static_cast<double>(hits);
        norm += v * v;
    }
    if (norm == 0.0) return std::nullopt;   // word vectors cancelled out exactly
    return sum;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("cosine distance of a zero vector");
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingCost::EmbeddingCost(const std::vector<LabelSpace>& spaces, const EmbeddingTable& table) {
    check_spaces(spaces);
    indexer_ = LabelIndexer(spaces);
    label_vecs_.resize(static_cast<size_t>(indexer_.total()));
    for (const auto& s : spaces) {
        for (int c = 0; c < s.size(); ++c) {
            std::vector<std::string> missing;
            auto vec = embed_name(table, s.classes[static_cast<size_t>(c)], &missing);
            if (!vec) {
                std::string words;
                for (const auto& w : missing) words += (words.empty() ? "" : ", ") + w;
                throw DataError("class '" + s.classes[static_cast<size_t>(c)] + "' of dataset " +
                                std::to_string(s.dataset) + " has no embedding (missing: " + words +
                                ")");
            }
            label_vecs_[static_cast<size_t>(indexer_.flat({s.dataset, c}))] = std::move(*vec);
        }
    }
}

MergeCost EmbeddingCost::evaluate(std::span<const LabelRef> members) const {
    MergeCost out;
    out.members.assign(members.begin(), members.end());
    std::vector<double> per(members.size(), 0.0);
    double total = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < members.size(); ++i) {
        for (size_t j = i + 1; j < members.size(); ++j) {
            double d = cosine_distance(label_vecs_[static_cast<size_t>(indexer_.flat(members[i]))],
                                       label_vecs_[static_cast<size_t>(indexer_.flat(members[j]))]);
            total += d;
            ++pairs;
            per[i] += d;
            per[j] += d;
        }
    }
    for (size_t i = 0; i < members.size(); ++i)
        out.per_label.emplace_back(members[i],
                                   members.size() > 1 ? per[i] / static_cast<double>(members.size() - 1)
                                                      : 0.0);
    out.cost = pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
    return out;
}

// ---------------------------------------------------------------------------
// Batch kernels
// ---------------------------------------------------------------------------

std::vector<MergeCost> evaluate_costs_serial(const CostProvider& provider,
                                             const std::vector<std::vector<LabelRef>>& sets) {
    std::vector<MergeCost> out(sets.size());
    for (size_t i = 0; i < sets.size(); ++i) out[i] = provider.evaluate(sets[i]);
    return out;
}

std::vector<MergeCost> evaluate_costs(const CostProvider& provider,
                                      const std::vector<std::vector<LabelRef>>& sets, int threads) {
    std::vector<MergeCost> out(sets.size());
    std::exception_ptr error;
#ifdef _OPENMP
    if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(sets.size()); ++i) {
        try {
            out[static_cast<size_t>(i)] = provider.evaluate(sets[static_cast<size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
#else
    (void)threads;
    for (size_t i = 0; i < sets.size(); ++i) out[i] = provider.evaluate(sets[i]);
#endif
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace unitax
