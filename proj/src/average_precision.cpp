#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "unitax/costs.hpp"
#include "unitax/errors.hpp"

namespace unitax {

namespace {

struct GtForImage {
    std::vector<Box> boxes;
    std::vector<char> matched;
};

// precision/recall points in detection-rank order -> 101-point interpolated AP
double interpolate_101(const std::vector<double>& precision, const std::vector<double>& recall) {
    // running max of precision from the right (COCO convention)
    std::vector<double> pmax(precision.size());
    double running = 0.0;
    for (size_t i = precision.size(); i-- > 0;) {
        running = std::max(running, precision[i]);
        pmax[i] = running;
    }
    double total = 0.0;
    size_t j = 0;   // first point with recall >= level
    for (int level = 0; level <= 100; ++level) {
        double r = static_cast<double>(level) / 100.0;
        while (j < recall.size() && recall[j] < r - 1e-12) ++j;
        if (j < recall.size()) total += pmax[j];
    }
    return total / 101.0;
}

} // namespace

double average_precision(std::span<const ScoredBox> detections, const GroundTruthSet& gt,
                         int class_id, std::span<const double> iou_thresholds) {
    if (iou_thresholds.empty()) throw DataError("average_precision: no IoU thresholds given");
    for (double t : iou_thresholds)
        if (!(t > 0.0 && t < 1.0)) throw DataError("IoU thresholds must lie in (0,1)");

    int npos = gt.instance_count(class_id);
    if (npos == 0) return kUndefinedCost;   // undefined; callers exclude it from means

    // score-descending order, stable in input order
    std::vector<size_t> order(detections.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return detections[a].score > detections[b].score; });

    double ap_sum = 0.0;
    for (double threshold : iou_thresholds) {
        std::unordered_map<std::string, GtForImage> gt_by_image;
        for (const auto& [img, anns] : gt.images) {
            auto& slot = gt_by_image[img];
            for (const auto& [box, cls] : anns)
                if (cls == class_id) slot.boxes.push_back(box);
            slot.matched.assign(slot.boxes.size(), 0);
        }

        std::vector<double> precision, recall;
        precision.reserve(detections.size());
        recall.reserve(detections.size());
        int tp = 0, fp = 0;
        for (size_t idx : order) {
            const auto& det = detections[idx];
            bool matched = false;
            auto it = gt_by_image.find(det.image_id);
            if (it != gt_by_image.end()) {
                auto& slot = it->second;
                double best = threshold;
                int best_j = -1;
                for (size_t j = 0; j < slot.boxes.size(); ++j) {
                    if (slot.matched[j]) continue;
                    double overlap = iou(det.box, slot.boxes[j]);
                    if (overlap >= best && (best_j < 0 || overlap > best)) {
                        best = overlap;
                        best_j = static_cast<int>(j);
                    }
                }
                if (best_j >= 0) {
                    slot.matched[static_cast<size_t>(best_j)] = 1;
                    matched = true;
                }
            }
            matched ? ++tp : ++fp;
            precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
            recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
        }
        ap_sum += interpolate_101(precision, recall);
    }
    return ap_sum / static_cast<double>(iou_thresholds.size());
}

} // namespace unitax
