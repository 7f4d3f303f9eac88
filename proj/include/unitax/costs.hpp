#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unitax/detections.hpp"
#include "unitax/labels.hpp"

namespace unitax {

inline constexpr double kUndefinedCost = std::numeric_limits<double>::quiet_NaN();

// Merge cost of one candidate member set, with the per-label contributions
// kept for audit output.
struct MergeCost {
    std::vector<LabelRef> members;
    double cost = 0.0;
    std::vector<std::pair<LabelRef, double>> per_label;
};

// A merge-cost measure. Implementations are pure and immutable after
// construction, so candidate batches can be evaluated in parallel.
class CostProvider {
public:
    virtual ~CostProvider() = default;

    // members: nonempty, sorted, at most one label per dataset.
    // Singletons cost exactly 0. Returns NaN when the measure is undefined
    // for this set (e.g. no data at all).
    virtual MergeCost evaluate(std::span<const LabelRef> members) const = 0;

    virtual std::string_view name() const = 0;

    double cost(std::span<const LabelRef> members) const { return evaluate(members).cost; }
};

// ---------------------------------------------------------------------------
// Average precision
// ---------------------------------------------------------------------------

// One detection as seen by the AP evaluator.
struct ScoredBox {
    double score = 0.0;
    std::string image_id;
    Box box;
};

// 101-point interpolated AP (COCO convention), averaged over the IoU
// thresholds. Detections are sorted by score descending with ties broken by
// input order; each detection greedily matches the highest-IoU unmatched
// ground-truth box with IoU >= threshold. Returns NaN (undefined) when the
// class has no ground-truth instances.
double average_precision(std::span<const ScoredBox> detections, const GroundTruthSet& gt,
                         int class_id, std::span<const double> iou_thresholds);

inline std::vector<double> coco_thresholds() {
    return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

// Score distortion between the partitioned and the merged columns, averaged
// over every record of the dump (all source datasets) and over the members.
class DistortionCost final : public CostProvider {
public:
    explicit DistortionCost(const DetectionDump& dump);

    MergeCost evaluate(std::span<const LabelRef> members) const override;
    std::string_view name() const override { return "distortion"; }

private:
    const DetectionDump& dump_;
    std::vector<double> columns_;   // column-major: columns_[flat * records + r]
    size_t record_count_ = 0;
};

// Per-class AP drop caused by the merge, normalized by the member's dataset
// vocabulary size. AP for a class of dataset k is measured on dataset k's
// validation records only. May be negative (a merge can improve AP).
class ApDeltaCost final : public CostProvider {
public:
    ApDeltaCost(const DetectionDump& dump, std::vector<GroundTruthSet> ground_truth,
                std::vector<double> iou_thresholds = coco_thresholds());

    MergeCost evaluate(std::span<const LabelRef> members) const override;
    std::string_view name() const override { return "ap"; }

    // AP of a single unmerged column; NaN when the class has no GT instances.
    double baseline_ap(const LabelRef& label) const;

private:
    const DetectionDump& dump_;
    std::vector<GroundTruthSet> gts_;               // aligned with dump spaces
    std::vector<char> have_;                        // which positions carry ground truth
    std::vector<double> thresholds_;
    std::vector<std::vector<size_t>> records_of_;   // per space position
    std::vector<double> baseline_;                  // per flat label
    double column_ap(const LabelRef& label, std::span<const LabelRef> members) const;
};

// ---------------------------------------------------------------------------
// Word embeddings
// ---------------------------------------------------------------------------

struct EmbeddingTable {
    int dim = 0;
    std::unordered_map<std::string, std::vector<float>> vectors;
};

// GloVe text format: token then dim floats per line.
EmbeddingTable load_embeddings(std::istream& in, const std::string& origin = "<stream>");
EmbeddingTable load_embeddings_file(const std::string& path);

// Mean of the word vectors of a (lowercased, tokenized) class name. Returns
// nullopt when no word is in vocabulary; `missing` (if given) collects the
// out-of-vocabulary words.
std::optional<std::vector<double>> embed_name(const EmbeddingTable& table, const std::string& name,
                                              std::vector<std::string>* missing = nullptr);

double cosine_distance(std::span<const double> a, std::span<const double> b);

// Mean pairwise cosine distance between the member class-name embeddings.
// Construction resolves every class name eagerly and throws a DataError
// listing any out-of-vocabulary word.
class EmbeddingCost final : public CostProvider {
public:
    EmbeddingCost(const std::vector<LabelSpace>& spaces, const EmbeddingTable& table);

    MergeCost evaluate(std::span<const LabelRef> members) const override;
    std::string_view name() const override { return "embedding"; }

private:
    LabelIndexer indexer_;
    std::vector<std::vector<double>> label_vecs_;   // per flat label
};

// ---------------------------------------------------------------------------
// Batch kernels (OpenMP) with a serial reference kept for testing
// ---------------------------------------------------------------------------

std::vector<MergeCost> evaluate_costs_serial(const CostProvider& provider,
                                             const std::vector<std::vector<LabelRef>>& sets);

// Parallel over candidates; each cost is computed by exactly one thread in
// the same arithmetic order as the serial path, so results are bit-identical
// for any thread count. threads <= 0 means "use all available".
std::vector<MergeCost> evaluate_costs(const CostProvider& provider,
                                      const std::vector<std::vector<LabelRef>>& sets,
                                      int threads = 0);

} // namespace unitax
