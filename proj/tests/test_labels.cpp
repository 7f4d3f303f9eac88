#include <doctest.h>

#include <algorithm>

#include "unitax/labels.hpp"
#include "unitax/rng.hpp"

using namespace unitax;

namespace {

std::vector<LabelSpace> two_spaces() {
    return {{0, "A", {"p", "q"}}, {1, "B", {"p"}}};
}

} // namespace

TEST_CASE("validate: all-singleton partition is ok") {
    TaxonomyDraft d;
    d.spaces = two_spaces();
    d.groups = {{{0, 0}}, {{0, 1}}, {{1, 0}}};
    CHECK(validate_taxonomy(d).ok());
}

TEST_CASE("validate: two labels from one dataset in a group") {
    TaxonomyDraft d;
    d.spaces = two_spaces();
    d.groups = {{{0, 0}, {0, 1}}, {{1, 0}}};
    auto report = validate_taxonomy(d);
    CHECK_FALSE(report.ok());
    CHECK(report.to_string().find("dataset 0") != std::string::npos);
}

TEST_CASE("validate: label covered twice") {
    TaxonomyDraft d;
    d.spaces = two_spaces();
    d.groups = {{{0, 0}}, {{0, 1}}, {{1, 0}}, {{1, 0}}};
    auto report = validate_taxonomy(d);
    CHECK_FALSE(report.ok());
    CHECK(report.to_string().find("covered 2 times") != std::string::npos);
}

TEST_CASE("validate: uncovered and unknown labels are reported") {
    TaxonomyDraft d;
    d.spaces = two_spaces();
    d.groups = {{{0, 0}}, {{0, 1}}, {{1, 5}}};
    auto report = validate_taxonomy(d);
    CHECK_FALSE(report.ok());
    CHECK(report.to_string().find("unknown label 1:5") != std::string::npos);
    CHECK(report.to_string().find("not covered") != std::string::npos);
}

TEST_CASE("merge_scores: pair mean, singleton identity, three-way mean") {
    TaxonomyDraft d;
    d.spaces = {{0, "A", {"person", "cat"}}, {1, "B", {"person"}}, {2, "C", {"person"}}};
    d.groups = {{{0, 0}, {1, 0}, {2, 0}}, {{0, 1}}};
    auto t = Taxonomy::build(d);

    ScoreVector s;
    s.per_dataset = {{0.9, 0.31}, {0.6}, {0.3}};
    auto unified = merge_scores(t, s);
    REQUIRE(unified.size() == 2);
    // canonical order: group of (0,0) first, then (0,1)
    CHECK(unified[0] == doctest::Approx(0.6).epsilon(1e-12));   // (0.9+0.6+0.3)/3
    CHECK(unified[1] == doctest::Approx(0.31).epsilon(1e-12));

    TaxonomyDraft d2;
    d2.spaces = {{0, "A", {"person"}}, {1, "B", {"person"}}};
    d2.groups = {{{0, 0}, {1, 0}}};
    auto t2 = Taxonomy::build(d2);
    ScoreVector s2;
    s2.per_dataset = {{0.8}, {0.6}};
    auto u2 = merge_scores(t2, s2);
    CHECK(u2[0] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("merge_scores: missing dataset vector is an input error") {
    auto t = Taxonomy::singletons(two_spaces());
    ScoreVector s;
    s.per_dataset = {{0.5, 0.5}};
    CHECK_THROWS_AS((void)merge_scores(t, s), DataError);
}

TEST_CASE("reproject: singleton-only taxonomy returns the original slice") {
    auto t = Taxonomy::singletons(two_spaces());
    ScoreVector s;
    s.per_dataset = {{0.1, 0.9}, {0.4}};
    auto unified = merge_scores(t, s);
    CHECK(reproject_scores(t, unified, 0) == s.per_dataset[0]);
    CHECK(reproject_scores(t, unified, 1) == s.per_dataset[1]);
}

TEST_CASE("reproject: merged group projects the unified score back") {
    TaxonomyDraft d;
    d.spaces = {{0, "A", {"person"}}, {1, "B", {"person"}}};
    d.groups = {{{0, 0}, {1, 0}}};
    auto t = Taxonomy::build(d);
    auto proj = reproject_scores(t, {0.7}, 0);
    CHECK(proj == std::vector<double>{0.7});
}

TEST_CASE("merge then reproject is the identity when member scores are equal") {
    TaxonomyDraft d;
    d.spaces = {{0, "A", {"x", "y"}}, {1, "B", {"x"}}};
    d.groups = {{{0, 0}, {1, 0}}, {{0, 1}}};
    auto t = Taxonomy::build(d);
    ScoreVector s;
    s.per_dataset = {{0.42, 0.13}, {0.42}};
    auto unified = merge_scores(t, s);
    CHECK(reproject_scores(t, unified, 0) == s.per_dataset[0]);
    CHECK(reproject_scores(t, unified, 1) == s.per_dataset[1]);
}

TEST_CASE("property: group sizes sum to the label total; reprojection error bounded by spread") {
    Rng rng(7);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<LabelSpace> spaces = {{0, "A", {"a0", "a1", "a2"}},
                                          {1, "B", {"b0", "b1"}},
                                          {2, "C", {"c0", "c1", "c2"}}};
        TaxonomyDraft d;
        d.spaces = spaces;
        std::vector<std::vector<LabelRef>> pools;
        for (const auto& sp : spaces)
            for (int c = 0; c < sp.size(); ++c) {
                LabelRef l{sp.dataset, c};
                bool placed = false;
                for (auto& g : pools) {
                    bool clash = std::any_of(g.begin(), g.end(),
                                             [&](const LabelRef& m) { return m.dataset == l.dataset; });
                    if (!clash && rng.uniform() < 0.3) {
                        g.push_back(l);
                        placed = true;
                        break;
                    }
                }
                if (!placed) pools.push_back({l});
            }
        d.groups = pools;
        auto t = Taxonomy::build(d);

        size_t total = 0;
        for (const auto& g : t.groups()) total += g.size();
        CHECK(total == 8);

        ScoreVector s;
        for (const auto& sp : spaces) {
            std::vector<double> col;
            for (int c = 0; c < sp.size(); ++c) col.push_back(rng.uniform());
            s.per_dataset.push_back(col);
        }
        auto unified = merge_scores(t, s);
        for (const auto& sp : spaces) {
            auto back = reproject_scores(t, unified, sp.dataset);
            for (int c = 0; c < sp.size(); ++c) {
                const auto& g = t.groups()[static_cast<size_t>(t.group_of({sp.dataset, c}))];
                double lo = 1.0, hi = 0.0;
                for (const auto& m : g) {
                    double v = s.per_dataset[static_cast<size_t>(m.dataset)][static_cast<size_t>(m.cls)];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                double orig = s.per_dataset[static_cast<size_t>(sp.dataset)][static_cast<size_t>(c)];
                CHECK(std::abs(back[static_cast<size_t>(c)] - orig) <= (hi - lo) + 1e-12);
            }
        }
    }
}

TEST_CASE("merge_scores is invariant to group and member ordering") {
    std::vector<LabelSpace> spaces = {{0, "A", {"a0", "a1"}}, {1, "B", {"b0", "b1"}}};
    TaxonomyDraft d1, d2;
    d1.spaces = d2.spaces = spaces;
    d1.groups = {{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}};
    d2.groups = {{{1, 0}, {0, 1}}, {{1, 1}, {0, 0}}};   // same partition, scrambled
    auto t1 = Taxonomy::build(d1);
    auto t2 = Taxonomy::build(d2);
    CHECK(t1.groups() == t2.groups());   // canonicalization makes them identical
    ScoreVector s;
    s.per_dataset = {{0.2, 0.8}, {0.5, 0.6}};
    CHECK(merge_scores(t1, s) == merge_scores(t2, s));
}

TEST_CASE("taxonomy JSON round-trip is byte-stable") {
    TaxonomyDraft d;
    d.spaces = {{0, "coco", {"person", "oven"}}, {1, "o365", {"Person", "Oven"}}};
    d.groups = {{{0, 0}, {1, 0}}, {{0, 1}}, {{1, 1}}};
    auto t = Taxonomy::build(d);
    std::string once = taxonomy_to_json(t);
    std::string twice = taxonomy_to_json(taxonomy_from_json(once));
    CHECK(once == twice);
}

TEST_CASE("taxonomy build rejects invalid drafts") {
    TaxonomyDraft d;
    d.spaces = two_spaces();
    d.groups = {{{0, 0}}, {{1, 0}}};   // (0,1) uncovered
    CHECK_THROWS_AS((void)Taxonomy::build(d), DataError);
}

TEST_CASE("duplicate class names within one dataset are rejected") {
    std::vector<LabelSpace> spaces = {{0, "A", {"p", "p"}}};
    CHECK_THROWS_AS(check_spaces(spaces), DataError);
}
