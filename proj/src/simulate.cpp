#include "unitax/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "unitax/rng.hpp"

namespace unitax {

using nlohmann::json;

LatentWorld world_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("world JSON parse error: ") + e.what());
    }
    LatentWorld w;
    try {
        for (const auto& d : j.at("datasets")) {
            WorldDataset ds;
            ds.id = d.at("id").get<int>();
            ds.name = d.value("name", std::string{});
            for (const auto& c : d.at("classes"))
                ds.classes.push_back({c.at("name").get<std::string>(),
                                      c.at("concept").get<std::string>()});
            w.datasets.push_back(std::move(ds));
        }
        w.images = j.value("images", w.images);
        if (j.contains("objects_per_image")) {
            w.min_objects = j.at("objects_per_image").at("min").get<int>();
            w.max_objects = j.at("objects_per_image").at("max").get<int>();
        }
        w.noise_sigma = j.value("noise_sigma", w.noise_sigma);
        w.base_score = j.value("base_score", w.base_score);
        w.box_jitter = j.value("box_jitter", w.box_jitter);
        w.seed = j.value("seed", w.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("world JSON schema error: ") + e.what());
    }
    return w;
}

std::string world_to_json(const LatentWorld& w) {
    json datasets = json::array();
    for (const auto& d : w.datasets) {
        json classes = json::array();
        for (const auto& c : d.classes) classes.push_back({{"name", c.name}, {"concept", c.concept_id}});
        datasets.push_back({{"id", d.id}, {"name", d.name}, {"classes", std::move(classes)}});
    }
    json j;
    j["datasets"] = std::move(datasets);
    j["images"] = w.images;
    j["objects_per_image"] = {{"min", w.min_objects}, {"max", w.max_objects}};
    j["noise_sigma"] = w.noise_sigma;
    j["base_score"] = w.base_score;
    j["box_jitter"] = w.box_jitter;
    j["seed"] = w.seed;
    return j.dump(2) + "\n";
}

namespace {

void check_world(const LatentWorld& w) {
    if (w.datasets.empty()) throw DataError("degenerate world: no datasets");
    if (w.noise_sigma < 0.0) throw DataError("noise_sigma must be >= 0");
    if (w.images < 0) throw DataError("images must be >= 0");
    if (w.min_objects < 0 || w.max_objects < w.min_objects)
        throw DataError("objects_per_image range is invalid");
    for (const auto& d : w.datasets) {
        if (d.classes.empty()) throw DataError("dataset " + std::to_string(d.id) + " has no classes");
        for (const auto& c : d.classes)
            if (c.concept_id.empty())
                throw DataError("class '" + c.name + "' has no concept");
    }
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

struct PerImage {
    std::vector<DetectionRecord> records;
    std::vector<std::pair<Box, int>> annotations;   // class ids in the image's dataset
};

} // namespace

SimOutput generate(const LatentWorld& world, int threads) {
    check_world(world);

    std::vector<LabelSpace> spaces;
    for (const auto& d : world.datasets) {
        LabelSpace s;
        s.dataset = d.id;
        s.name = d.name;
        for (const auto& c : d.classes) s.classes.push_back(c.name);
        spaces.push_back(std::move(s));
    }
    std::sort(spaces.begin(), spaces.end(),
              [](const LabelSpace& a, const LabelSpace& b) { return a.dataset < b.dataset; });
    check_spaces(spaces);

    std::vector<WorldDataset> datasets = world.datasets;
    std::sort(datasets.begin(), datasets.end(),
              [](const WorldDataset& a, const WorldDataset& b) { return a.id < b.id; });
    const int dataset_count = static_cast<int>(datasets.size());

    // concept -> every (space position, class id) mapped to it
    std::map<std::string, std::vector<std::pair<int, int>>> concept_classes;
    for (int p = 0; p < dataset_count; ++p)
        for (size_t c = 0; c < datasets[static_cast<size_t>(p)].classes.size(); ++c)
            concept_classes[datasets[static_cast<size_t>(p)].classes[c].concept_id]
                .emplace_back(p, static_cast<int>(c));

    // ground-truth taxonomy: partition of labels by concept
    TaxonomyDraft truth_draft;
    truth_draft.spaces = spaces;
    for (const auto& [concept_id, classes] : concept_classes) {
        std::vector<LabelRef> group;
        for (const auto& [p, c] : classes) group.push_back({spaces[static_cast<size_t>(p)].dataset, c});
        truth_draft.groups.push_back(std::move(group));
    }

    SimOutput out;
    out.truth = Taxonomy::build(std::move(truth_draft));
    out.dump.spaces = spaces;
    out.dump.indexer = LabelIndexer(spaces);
    out.ground_truth.resize(spaces.size());
    for (size_t p = 0; p < spaces.size(); ++p) out.ground_truth[p].dataset = spaces[p].dataset;

    const double canvas = 512.0;
    const int grid = 4;
    const double cell = canvas / grid;

    std::vector<PerImage> images(static_cast<size_t>(world.images));

#ifdef _OPENMP
    if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
#else
    (void)threads;
#endif
    for (long long i = 0; i < static_cast<long long>(world.images); ++i) {
        Rng rng = Rng::derive(world.seed, static_cast<uint64_t>(i));
        const int p = static_cast<int>(i % dataset_count);   // owning dataset, round robin
        const auto& ds = datasets[static_cast<size_t>(p)];
        PerImage& img = images[static_cast<size_t>(i)];
        std::string image_id = "img_" + std::to_string(i);

        int objects = static_cast<int>(rng.uniform_int(world.min_objects, world.max_objects));
        // distinct jittered grid cells so boxes do not pile up
        std::vector<int> cells(static_cast<size_t>(grid * grid));
        for (size_t k = 0; k < cells.size(); ++k) cells[k] = static_cast<int>(k);
        for (size_t k = cells.size(); k > 1; --k)
            std::swap(cells[k - 1], cells[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(k) - 1))]);
        objects = std::min<int>(objects, static_cast<int>(cells.size()));

        for (int o = 0; o < objects; ++o) {
            int cls = static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(ds.classes.size()) - 1));
            const std::string& concept_id = ds.classes[static_cast<size_t>(cls)].concept_id;

            int cx = cells[static_cast<size_t>(o)] % grid;
            int cy = cells[static_cast<size_t>(o)] / grid;
            double size = cell * rng.uniform(0.45, 0.6);
            double x = cx * cell + rng.uniform(0.0, cell - size);
            double y = cy * cell + rng.uniform(0.0, cell - size);
            Box gt_box{x, y, x + size, y + size};
            img.annotations.emplace_back(gt_box, cls);

            Box det_box = gt_box;
            if (world.box_jitter > 0.0) {
                double dx = rng.uniform(-world.box_jitter, world.box_jitter) * size;
                double dy = rng.uniform(-world.box_jitter, world.box_jitter) * size;
                det_box = Box{gt_box.x1 + dx, gt_box.y1 + dy, gt_box.x2 + dx, gt_box.y2 + dy};
            }

            DetectionRecord rec;
            rec.image_id = image_id;
            rec.source_dataset = ds.id;
            rec.box = det_box;
            rec.scores.resize(spaces.size());
            for (size_t q = 0; q < spaces.size(); ++q) {
                auto& col = rec.scores[q];
                col.resize(datasets[q].classes.size());
                for (size_t c = 0; c < col.size(); ++c) {
                    if (datasets[q].classes[c].concept_id == concept_id)
                        col[c] = clip01(world.base_score + rng.gaussian(world.noise_sigma));
                    else
                        col[c] = clip01(std::fabs(rng.gaussian(0.1 * world.noise_sigma)));
                }
            }
            img.records.push_back(std::move(rec));
        }
    }

    // records grouped by source dataset, stable per-image order within a group
    for (int p = 0; p < dataset_count; ++p) {
        for (long long i = p; i < static_cast<long long>(world.images); i += dataset_count) {
            PerImage& img = images[static_cast<size_t>(i)];
            if (!img.annotations.empty())
                out.ground_truth[static_cast<size_t>(p)].images["img_" + std::to_string(i)] =
                    std::move(img.annotations);
            for (auto& rec : img.records) out.dump.records.push_back(std::move(rec));
        }
    }
    return out;
}

RecoveryScore recovery_score(const Taxonomy& solution, const Taxonomy& truth) {
    // same label universe?
    const auto& a = solution.spaces();
    const auto& b = truth.spaces();
    bool same = a.size() == b.size();
    for (size_t i = 0; same && i < a.size(); ++i)
        same = a[i].dataset == b[i].dataset && a[i].size() == b[i].size();
    if (!same) throw DataError("recovery_score: label universes differ");

    const int total = solution.indexer().total();
    RecoveryScore score;
    score.exact = solution.groups() == truth.groups();

    if (total < 2) {
        score.agreement = 1.0;
        return score;
    }
    // pair-counting (Rand) agreement: fraction of label pairs on which the
    // two partitions agree about same-group membership
    long long agree = 0, pairs = 0;
    for (int f = 0; f < total; ++f) {
        LabelRef lf = solution.indexer().unflat(f);
        for (int g = f + 1; g < total; ++g) {
            LabelRef lg = solution.indexer().unflat(g);
            bool in_sol = solution.group_of(lf) == solution.group_of(lg);
            bool in_truth = truth.group_of(lf) == truth.group_of(lg);
            if (in_sol == in_truth) ++agree;
            ++pairs;
        }
    }
    score.agreement = static_cast<double>(agree) / static_cast<double>(pairs);
    return score;
}

} // namespace unitax
