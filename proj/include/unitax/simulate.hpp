#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unitax/detections.hpp"
#include "unitax/labels.hpp"

namespace unitax {

// Latent-concept world: every dataset class maps to exactly one concept;
// classes of different datasets mapped to the same concept are the ground
// truth merges. Names may alias ("cow"/"cattle") or collide across concepts
// ("oven"-style splits).
struct WorldClass {
    std::string name;
    std::string concept_id;
};

struct WorldDataset {
    int id = 0;
    std::string name;
    std::vector<WorldClass> classes;
};

struct LatentWorld {
    std::vector<WorldDataset> datasets;
    int images = 200;
    int min_objects = 1;
    int max_objects = 4;
    double noise_sigma = 0.05;
    double base_score = 0.8;
    double box_jitter = 0.0;    // detection-box offset as a fraction of the box size
    uint64_t seed = 1;
};

LatentWorld world_from_json(const std::string& text);
std::string world_to_json(const LatentWorld& world);

struct SimOutput {
    DetectionDump dump;
    std::vector<GroundTruthSet> ground_truth;   // one per dataset
    Taxonomy truth;                             // partition of labels by concept
};

// Deterministic generation: images are assigned to datasets round-robin;
// each object picks one of its dataset's concepts, emits a GT box on a
// jittered grid and a detection whose score is base+N(0,sigma) for every
// class of that concept and |N(0,0.1*sigma)| elsewhere. Per-image RNG
// streams are derived from (seed, image index), so generation is
// reproducible at any thread count.
SimOutput generate(const LatentWorld& world, int threads = 0);

struct RecoveryScore {
    bool exact = false;
    double agreement = 0.0;   // pair-counting (Rand) agreement in [0,1]
};

// Compares two partitions of the same label universe. Throws DataError when
// the universes differ.
RecoveryScore recovery_score(const Taxonomy& solution, const Taxonomy& truth);

} // namespace unitax
