#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unitax/labels.hpp"

namespace unitax {

// Corner-encoded pixel box, x1 < x2, y1 < y2.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double area() const { return (x2 - x1) * (y2 - y1); }
    bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

// One post-NMS detection: a box plus the full score vector of every dataset
// head. scores is aligned with the dump's space list.
struct DetectionRecord {
    std::string image_id;
    int source_dataset = 0;   // dataset id of the validation set the image came from
    Box box;
    std::vector<std::vector<double>> scores;
};

struct DetectionDump {
    std::vector<LabelSpace> spaces;   // ascending dataset id
    std::vector<DetectionRecord> records;
    LabelIndexer indexer;

    const LabelSpace* space_for(int dataset_id) const;
};

// JSONL ingestion: one header line, then one record per line. Scores may be
// dense arrays or sparse [index, value] pairs; absent sparse entries read
// back as zero. Parse failures name the 1-based line number.
DetectionDump load_dump(std::istream& in, const std::string& origin = "<stream>");
DetectionDump load_dump_file(const std::string& path);

// Writes the canonical JSONL form. With sparse=true, scores below 1e-4 are
// dropped from the record (they read back as 0).
void save_dump(const DetectionDump& dump, std::ostream& out, bool sparse = false);
void save_dump_file(const DetectionDump& dump, const std::string& path, bool sparse = false);

// Annotated boxes for one dataset, keyed by image id (ordered for
// deterministic serialization).
struct GroundTruthSet {
    int dataset = 0;
    std::map<std::string, std::vector<std::pair<Box, int>>> images;

    int instance_count(int class_id) const;
};

GroundTruthSet load_ground_truth(std::istream& in, const std::string& origin = "<stream>");
GroundTruthSet load_ground_truth_file(const std::string& path);
void save_ground_truth(const GroundTruthSet& gt, std::ostream& out);
void save_ground_truth_file(const GroundTruthSet& gt, const std::string& path);

// All scores for one label, in stable record order, optionally restricted to
// records from one source dataset. Pairs are (record index, score).
std::vector<std::pair<size_t, double>> score_column(const DetectionDump& dump,
                                                    const LabelRef& label,
                                                    std::optional<int> restrict_to = std::nullopt);

} // namespace unitax
