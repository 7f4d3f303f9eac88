#include <doctest.h>

#include <sstream>

#include "unitax/detections.hpp"
#include "unitax/rng.hpp"

using namespace unitax;

namespace {

const char* kTwoDatasetDump =
    R"({"datasets":[{"id":0,"name":"a","classes":["person","car"]},{"id":1,"name":"b","classes":["person"]}]}
{"img":"i1","src":0,"box":[0,0,10,10],"scores":{"0":[0.9,0.1],"1":[0.8]}}
{"img":"i1","src":0,"box":[5,5,20,20],"scores":{"0":[0.2,0.7],"1":[0.1]}}
{"img":"i2","src":1,"box":[0,0,4,4],"scores":{"0":[[0,0.5]],"1":[0.6]}}
)";

} // namespace

TEST_CASE("iou: identity, disjoint, hand-computed overlap") {
    Box a{0, 0, 2, 2};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, Box{3, 3, 5, 5}) == 0.0);
    // intersection 1x2 = 2, union 4+4-2 = 6
    CHECK(iou(a, Box{1, 0, 3, 2}) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("iou: symmetric and monotone under shrinking intersection") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Box a{rng.uniform(0, 10), rng.uniform(0, 10), 0, 0};
        a.x2 = a.x1 + rng.uniform(1, 5);
        a.y2 = a.y1 + rng.uniform(1, 5);
        Box b{rng.uniform(0, 10), rng.uniform(0, 10), 0, 0};
        b.x2 = b.x1 + rng.uniform(1, 5);
        b.y2 = b.y1 + rng.uniform(1, 5);
        double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        // sliding b away can only shrink the overlap
        Box shifted{b.x1 + 1.0, b.y1, b.x2 + 1.0, b.y2};
        if (b.x1 >= a.x1) CHECK(iou(a, shifted) <= v + 1e-12);
    }
}

TEST_CASE("load_dump: well-formed two-dataset dump") {
    std::istringstream in(kTwoDatasetDump);
    auto dump = load_dump(in);
    REQUIRE(dump.records.size() == 3);
    CHECK(dump.spaces.size() == 2);
    CHECK(dump.records[0].scores[0][0] == doctest::Approx(0.9));
    // sparse record: omitted entries read back as zero
    CHECK(dump.records[2].scores[0][0] == doctest::Approx(0.5));
    CHECK(dump.records[2].scores[0][1] == 0.0);
}

TEST_CASE("load_dump: score vector length mismatch names the line") {
    std::string text =
        R"({"datasets":[{"id":0,"name":"a","classes":["x","y"]}]}
{"img":"i","src":0,"box":[0,0,1,1],"scores":{"0":[0.5]}}
)";
    std::istringstream in(text);
    CHECK_THROWS_WITH_AS((void)load_dump(in, "dump.jsonl"), doctest::Contains("dump.jsonl:2"),
                         DataError);
}

TEST_CASE("load_dump: empty file is a valid zero-record dump") {
    std::istringstream in("");
    auto dump = load_dump(in);
    CHECK(dump.records.empty());
    CHECK(dump.spaces.empty());
}

TEST_CASE("load_dump: unknown source dataset and bad scores are rejected") {
    std::string header = R"({"datasets":[{"id":0,"name":"a","classes":["x"]}]})";
    {
        std::istringstream in(header + "\n" +
                              R"({"img":"i","src":3,"box":[0,0,1,1],"scores":{"0":[0.5]}})" + "\n");
        CHECK_THROWS_AS((void)load_dump(in), DataError);
    }
    {
        std::istringstream in(header + "\n" +
                              R"({"img":"i","src":0,"box":[0,0,1,1],"scores":{"0":[1.5]}})" + "\n");
        CHECK_THROWS_AS((void)load_dump(in), DataError);   // score far outside [0,1]
    }
    {
        std::istringstream in(header + "\n" +
                              R"({"img":"i","src":0,"box":[2,0,1,1],"scores":{"0":[0.5]}})" + "\n");
        CHECK_THROWS_AS((void)load_dump(in), DataError);   // inverted box
    }
}

TEST_CASE("save_dump / load_dump round-trips the in-memory model") {
    std::istringstream in(kTwoDatasetDump);
    auto dump = load_dump(in);
    std::ostringstream out;
    save_dump(dump, out);
    std::istringstream in2(out.str());
    auto dump2 = load_dump(in2);
    REQUIRE(dump2.records.size() == dump.records.size());
    for (size_t r = 0; r < dump.records.size(); ++r) {
        CHECK(dump2.records[r].image_id == dump.records[r].image_id);
        CHECK(dump2.records[r].box == dump.records[r].box);
        CHECK(dump2.records[r].scores == dump.records[r].scores);
    }
    // and the serialized form itself is stable
    std::ostringstream out2;
    save_dump(dump2, out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("sparse writing drops sub-floor scores") {
    std::istringstream in(kTwoDatasetDump);
    auto dump = load_dump(in);
    dump.records[0].scores[0][1] = 5e-5;   // below the 1e-4 floor
    std::ostringstream out;
    save_dump(dump, out, /*sparse=*/true);
    std::istringstream in2(out.str());
    auto dump2 = load_dump(in2);
    CHECK(dump2.records[0].scores[0][1] == 0.0);
    CHECK(dump2.records[0].scores[0][0] == doctest::Approx(0.9));
}

TEST_CASE("score_column: record order, restriction, empty dump") {
    std::istringstream in(kTwoDatasetDump);
    auto dump = load_dump(in);

    auto col = score_column(dump, {0, 0});
    REQUIRE(col.size() == 3);
    CHECK(col[0].second == doctest::Approx(0.9));
    CHECK(col[1].second == doctest::Approx(0.2));
    CHECK(col[2].second == doctest::Approx(0.5));

    auto restricted = score_column(dump, {1, 0}, 1);
    REQUIRE(restricted.size() == 1);
    CHECK(restricted[0].second == doctest::Approx(0.6));

    DetectionDump empty;
    empty.spaces = dump.spaces;
    empty.indexer = LabelIndexer(empty.spaces);
    CHECK(score_column(empty, {0, 1}).empty());

    CHECK_THROWS_AS((void)score_column(dump, {5, 0}), DataError);
}

TEST_CASE("ground truth round-trip") {
    GroundTruthSet gt;
    gt.dataset = 1;
    gt.images["img_a"] = {{Box{0, 0, 5, 5}, 0}, {Box{2, 2, 9, 9}, 2}};
    gt.images["img_b"] = {{Box{1, 1, 3, 3}, 1}};
    std::ostringstream out;
    save_ground_truth(gt, out);
    std::istringstream in(out.str());
    auto gt2 = load_ground_truth(in);
    CHECK(gt2.dataset == 1);
    CHECK(gt2.images == gt.images);
    CHECK(gt2.instance_count(0) == 1);
    CHECK(gt2.instance_count(7) == 0);
}
