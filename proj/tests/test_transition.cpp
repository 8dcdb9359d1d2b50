#include <doctest.h>

#include <set>

#include "mipll/transition.hpp"

using namespace mipll;

namespace {

HierarchyTree cifar_tree() {
    return HierarchyTree::from_edges({
        {"land_transportation", {"automobile", "truck"}},
        {"other_transportation", {"airplane", "ship"}},
        {"transportation", {"land_transportation", "other_transportation"}},
        {"home_land_animal", {"cat", "dog"}},
        {"wild_land_animal", {"deer", "horse"}},
        {"land_animal", {"home_land_animal", "wild_land_animal"}},
        {"other_animal", {"bird", "frog"}},
        {"animal", {"land_animal", "other_animal"}},
        {"entity", {"transportation", "animal"}},
    });
}

}  // namespace

TEST_CASE("max and sum transitions evaluate elementwise") {
    auto mx = TransitionSpec::max_of(2, 10);
    CHECK(mx.eval({3, 7}) == PartialLabel{std::int64_t{7}});
    auto sm = TransitionSpec::sum_of(3, 10);
    CHECK(sm.eval({1, 2, 3}) == PartialLabel{std::int64_t{6}});
}

TEST_CASE("hierarchy transition maps to the lowest common ancestor") {
    auto spec = TransitionSpec::hierarchy(cifar_tree());
    CHECK(spec.num_classes() == 10);
    int automobile = spec.class_index("automobile");
    int truck = spec.class_index("truck");
    CHECK(spec.eval({automobile, truck}) == PartialLabel{std::string("land_transportation")});
    int cat = spec.class_index("cat");
    CHECK(spec.eval({cat, cat}) == PartialLabel{std::string("cat")});
    CHECK(spec.eval({automobile, cat}) == PartialLabel{std::string("entity")});
}

TEST_CASE("out-of-range labels are rejected") {
    auto spec = TransitionSpec::max_of(2, 4);
    CHECK_THROWS_AS(spec.eval({0, 4}), Error);
    try {
        spec.eval({-1, 0});
        FAIL("expected InvalidLabel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidLabel);
    }
}

TEST_CASE("pre-image of max matches the worked example") {
    auto spec = TransitionSpec::max_of(2, 10);
    PreimageIndex index(spec);
    auto pre = index.enumerate(PartialLabel{std::int64_t{1}});
    REQUIRE(pre.size() == 3);
    CHECK(pre[0] == std::vector<int>{0, 1});
    CHECK(pre[1] == std::vector<int>{1, 0});
    CHECK(pre[2] == std::vector<int>{1, 1});

    auto zero = index.enumerate(PartialLabel{std::int64_t{0}});
    REQUIRE(zero.size() == 1);
    CHECK(zero[0] == std::vector<int>{0, 0});
}

TEST_CASE("pre-image counts avoid materialization") {
    auto spec = TransitionSpec::max_of(5, 10);
    PreimageIndex index(spec);
    CHECK(index.count(PartialLabel{std::int64_t{9}}) == 40951);  // 10^5 - 9^5
    std::int64_t total = 0;
    for (const auto& s : spec.partial_space()) total += index.count(s);
    CHECK(total == 100000);
}

TEST_CASE("materialization cap raises PreimageTooLarge") {
    auto spec = TransitionSpec::max_of(5, 10);
    PreimageIndex index(spec, /*materialize_cap=*/1000);
    CHECK_THROWS_AS(index.enumerate(PartialLabel{std::int64_t{9}}), Error);
    CHECK_NOTHROW(index.enumerate(PartialLabel{std::int64_t{1}}));
}

TEST_CASE("pre-images partition the label-vector space and agree with eval") {
    for (int c : {2, 3, 6}) {
        for (int m : {2, 3, 4}) {
            for (auto spec : {TransitionSpec::max_of(m, c), TransitionSpec::sum_of(m, c)}) {
                PreimageIndex index(spec);
                std::int64_t total = 0;
                std::set<std::vector<int>> seen;
                for (const auto& s : spec.partial_space()) {
                    auto pre = index.enumerate(s);
                    CHECK(static_cast<std::int64_t>(pre.size()) == index.count(s));
                    total += static_cast<std::int64_t>(pre.size());
                    for (const auto& y : pre) {
                        CHECK(spec.eval(y) == s);
                        CHECK(seen.insert(y).second);  // pairwise disjoint
                    }
                }
                std::int64_t expected = 1;
                for (int i = 0; i < m; ++i) expected *= c;
                CHECK(total == expected);
            }
        }
    }
}

TEST_CASE("partial space of a hierarchy covers leaves and internal nodes") {
    auto spec = TransitionSpec::hierarchy(cifar_tree());
    CHECK(spec.num_partial_labels() == 19);  // 10 leaves + 9 internal nodes
    PreimageIndex index(spec);
    std::int64_t total = 0;
    for (const auto& s : spec.partial_space()) total += index.count(s);
    CHECK(total == 100);
}

TEST_CASE("DNF construction mirrors the pre-image") {
    auto spec = TransitionSpec::max_of(2, 10);
    auto f1 = build_dnf(spec, PartialLabel{std::int64_t{0}}, 1);
    REQUIRE(f1.conjunctions.size() == 1);
    REQUIRE(f1.conjunctions[0].size() == 2);
    CHECK(f1.conjunctions[0][0].slot == 0);
    CHECK(f1.conjunctions[0][0].label == 0);
    CHECK(f1.conjunctions[0][1].slot == 1);
    CHECK(f1.conjunctions[0][1].label == 0);

    auto f2 = build_dnf(spec, PartialLabel{std::int64_t{1}}, 2);
    CHECK(f2.conjunctions.size() == 3);

    auto sum = TransitionSpec::sum_of(2, 2);
    auto f3 = build_dnf(sum, PartialLabel{std::int64_t{1}}, 0);
    REQUIRE(f3.conjunctions.size() == 2);  // (0,1) and (1,0)
    CHECK(f3.conjunctions[0][0].label == 0);
    CHECK(f3.conjunctions[0][1].label == 1);
    CHECK(f3.conjunctions[1][0].label == 1);
    CHECK(f3.conjunctions[1][1].label == 0);
}

TEST_CASE("DNF fidelity: every conjunction maps back to its partial label") {
    for (auto spec : {TransitionSpec::max_of(3, 4), TransitionSpec::sum_of(2, 5)}) {
        for (const auto& s : spec.partial_space()) {
            auto formula = build_dnf(spec, s, 0);
            for (const auto& conj : formula.conjunctions) {
                std::vector<int> y(spec.arity(), -1);
                for (const auto& atom : conj) y[atom.slot] = atom.label;
                CHECK(spec.eval(y) == s);
            }
        }
    }
}

TEST_CASE("table transitions must be total") {
    std::vector<std::pair<std::vector<int>, PartialLabel>> entries;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            entries.push_back({{a, b}, PartialLabel{std::int64_t{a ^ b}}});
    auto spec = TransitionSpec::table(2, 2, entries);
    CHECK(spec.eval({1, 1}) == PartialLabel{std::int64_t{0}});
    CHECK(spec.num_partial_labels() == 2);

    entries.pop_back();
    CHECK_THROWS_AS(TransitionSpec::table(2, 2, entries), Error);
}

TEST_CASE("unknown partial labels are rejected") {
    auto spec = TransitionSpec::max_of(2, 3);
    PreimageIndex index(spec);
    CHECK_THROWS_AS(index.enumerate(PartialLabel{std::int64_t{7}}), Error);
}
