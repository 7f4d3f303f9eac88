#include "unitax/detections.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "json_common.hpp"

namespace unitax {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
    double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return inter / uni;
}

const LabelSpace* DetectionDump::space_for(int dataset_id) const {
    int pos = indexer.position(dataset_id);
    return pos < 0 ? nullptr : &spaces[static_cast<size_t>(pos)];
}

namespace {

constexpr double kScoreSlack = 1e-9;   // tolerated overshoot outside [0,1]
constexpr double kSparseFloor = 1e-4;  // scores below this may be dropped when writing sparse

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& msg) {
    throw DataError(origin + ":" + std::to_string(line) + ": " + msg);
}

Box parse_box(const json& arr, const std::string& origin, size_t line) {
    if (!arr.is_array() || arr.size() != 4) fail(origin, line, "box must be [x1,y1,x2,y2]");
    Box b{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(), arr[3].get<double>()};
    if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) || !std::isfinite(b.y2))
        fail(origin, line, "box coordinates must be finite");
    if (b.x1 >= b.x2 || b.y1 >= b.y2) fail(origin, line, "box must have positive area (x1<x2, y1<y2)");
    return b;
}

double checked_score(double v, const std::string& origin, size_t line) {
    if (!std::isfinite(v) || v < -kScoreSlack || v > 1.0 + kScoreSlack)
        fail(origin, line, "score " + std::to_string(v) + " outside [0,1]");
    return std::clamp(v, 0.0, 1.0);
}

json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

} // namespace

DetectionDump load_dump(std::istream& in, const std::string& origin) {
    DetectionDump dump;
    std::string line;
    size_t lineno = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(origin, lineno, std::string("JSON parse error: ") + e.what());
        }
        if (!have_header) {
            if (!j.contains("datasets")) fail(origin, lineno, "header line must carry 'datasets'");
            try {
                dump.spaces = spaces_from_json_array(j.at("datasets"));
            } catch (const json::exception& e) {
                fail(origin, lineno, std::string("bad header: ") + e.what());
            }
            try {
                check_spaces(dump.spaces);
            } catch (const DataError& e) {
                fail(origin, lineno, e.what());
            }
            dump.indexer = LabelIndexer(dump.spaces);
            have_header = true;
            continue;
        }

        DetectionRecord rec;
        try {
            rec.image_id = j.at("img").get<std::string>();
            rec.source_dataset = j.at("src").get<int>();
        } catch (const json::exception& e) {
            fail(origin, lineno, std::string("bad record: ") + e.what());
        }
        if (dump.indexer.position(rec.source_dataset) < 0)
            fail(origin, lineno, "unknown source dataset id " + std::to_string(rec.source_dataset));
        rec.box = parse_box(j.at("box"), origin, lineno);

        if (!j.contains("scores") || !j.at("scores").is_object())
            fail(origin, lineno, "record must carry a 'scores' object");
        const json& scores = j.at("scores");
        rec.scores.resize(dump.spaces.size());
        for (size_t p = 0; p < dump.spaces.size(); ++p) {
            const auto& space = dump.spaces[p];
            std::string key = std::to_string(space.dataset);
            if (!scores.contains(key))
                fail(origin, lineno, "scores missing for dataset " + key);
            const json& col = scores.at(key);
            if (!col.is_array()) fail(origin, lineno, "scores for dataset " + key + " must be an array");
            auto& out = rec.scores[p];
            bool sparse = !col.empty() && col[0].is_array();
            if (sparse) {
                out.assign(static_cast<size_t>(space.size()), 0.0);
                for (const auto& pair : col) {
                    if (!pair.is_array() || pair.size() != 2)
                        fail(origin, lineno, "sparse score entries must be [index, value]");
                    int idx = pair[0].get<int>();
                    if (idx < 0 || idx >= space.size())
                        fail(origin, lineno, "sparse score index " + std::to_string(idx) +
                                                 " out of range for dataset " + key);
                    out[static_cast<size_t>(idx)] = checked_score(pair[1].get<double>(), origin, lineno);
                }
            } else {
                if (col.size() != static_cast<size_t>(space.size()))
                    fail(origin, lineno, "score vector for dataset " + key + " has length " +
                                             std::to_string(col.size()) + ", expected " +
                                             std::to_string(space.size()));
                out.reserve(col.size());
                for (const auto& v : col) out.push_back(checked_score(v.get<double>(), origin, lineno));
            }
        }
        dump.records.push_back(std::move(rec));
    }

    if (!have_header && !dump.records.empty()) fail(origin, 1, "missing header line");
    if (!have_header) {
        // empty file: a valid, zero-record dump with no datasets
        dump.indexer = LabelIndexer(dump.spaces);
    }
    return dump;
}

DetectionDump load_dump_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open detections file: " + path);
    return load_dump(in, path);
}

void save_dump(const DetectionDump& dump, std::ostream& out, bool sparse) {
    json header;
    header["datasets"] = spaces_to_json_array(dump.spaces);
    out << header.dump() << "\n";
    for (const auto& rec : dump.records) {
        json j;
        j["img"] = rec.image_id;
        j["src"] = rec.source_dataset;
        j["box"] = box_to_json(rec.box);
        json scores = json::object();
        for (size_t p = 0; p < dump.spaces.size(); ++p) {
            std::string key = std::to_string(dump.spaces[p].dataset);
            if (sparse) {
                json col = json::array();
                for (size_t c = 0; c < rec.scores[p].size(); ++c)
                    if (rec.scores[p][c] >= kSparseFloor)
                        col.push_back(json::array({static_cast<int>(c), rec.scores[p][c]}));
                scores[key] = std::move(col);
            } else {
                scores[key] = rec.scores[p];
            }
        }
        j["scores"] = std::move(scores);
        out << j.dump() << "\n";
    }
}

void save_dump_file(const DetectionDump& dump, const std::string& path, bool sparse) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write detections file: " + path);
    save_dump(dump, out, sparse);
}

int GroundTruthSet::instance_count(int class_id) const {
    int n = 0;
    for (const auto& [img, boxes] : images)
        for (const auto& [box, cls] : boxes)
            if (cls == class_id) ++n;
    return n;
}

GroundTruthSet load_ground_truth(std::istream& in, const std::string& origin) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(origin + ": ground-truth JSON parse error: " + std::string(e.what()));
    }
    GroundTruthSet gt;
    try {
        gt.dataset = j.at("dataset").get<int>();
        for (const auto& [img, anns] : j.at("images").items()) {
            auto& list = gt.images[img];
            for (const auto& a : anns) {
                Box b = parse_box(a.at("box"), origin, 0);
                int cls = a.at("class").get<int>();
                if (cls < 0) throw DataError(origin + ": negative class id in ground truth");
                list.emplace_back(b, cls);
            }
        }
    } catch (const json::exception& e) {
        throw DataError(origin + ": ground-truth schema error: " + std::string(e.what()));
    }
    return gt;
}

GroundTruthSet load_ground_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ground-truth file: " + path);
    return load_ground_truth(in, path);
}

void save_ground_truth(const GroundTruthSet& gt, std::ostream& out) {
    json images = json::object();
    for (const auto& [img, boxes] : gt.images) {
        json anns = json::array();
        for (const auto& [box, cls] : boxes)
            anns.push_back({{"box", box_to_json(box)}, {"class", cls}});
        images[img] = std::move(anns);
    }
    json j;
    j["dataset"] = gt.dataset;
    j["images"] = std::move(images);
    out << j.dump(2) << "\n";
}

void save_ground_truth_file(const GroundTruthSet& gt, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write ground-truth file: " + path);
    save_ground_truth(gt, out);
}

std::vector<std::pair<size_t, double>> score_column(const DetectionDump& dump, const LabelRef& label,
                                                    std::optional<int> restrict_to) {
    int pos = dump.indexer.position(label.dataset);
    if (pos < 0 || label.cls < 0 || label.cls >= dump.spaces[static_cast<size_t>(pos)].size())
        throw DataError("label " + std::to_string(label.dataset) + ":" + std::to_string(label.cls) +
                        " not in dump header");
    std::vector<std::pair<size_t, double>> out;
    for (size_t r = 0; r < dump.records.size(); ++r) {
        const auto& rec = dump.records[r];
        if (restrict_to && rec.source_dataset != *restrict_to) continue;
        out.emplace_back(r, rec.scores[static_cast<size_t>(pos)][static_cast<size_t>(label.cls)]);
    }
    return out;
}

} // namespace unitax
