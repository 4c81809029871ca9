#include <doctest.h>

#include <cmath>
#include <numbers>

#include "polyreg/error.hpp"
#include "polyreg/partition.hpp"
#include "support.hpp"

using namespace polyreg;
using namespace polyreg::testing;

namespace {

ParameterVector momentsFor(const WeightedSample& s, int degree = 1) {
    return parameterVector(accumulate(s, BasisSpec(degree, AffineMap::standardizing(s))));
}

// Leaf membership by replaying every rule on the root-to-leaf path.
std::vector<int> leavesContaining(const RegionTree& tree, std::span<const double> x) {
    std::vector<int> hits;
    std::vector<std::pair<int, bool>> path;  // (node, ok so far)
    std::function<void(int, bool)> walk = [&](int id, bool ok) {
        const auto& n = tree.nodes[static_cast<std::size_t>(id)];
        if (n.isLeaf()) {
            if (ok) hits.push_back(id);
            return;
        }
        const bool left = n.rule->goesLeft(x);
        walk(n.left, ok && left);
        walk(n.right, ok && !left);
    };
    walk(0, true);
    return hits;
}

WeightedSample stepSample(Rng& rng, std::size_t n) {
    return randomSample(rng, n, 1, -1.0, 1.0, [](auto x) { return x[0] > 0 ? 1.0 : -1.0; }, 0.05);
}

}  // namespace

TEST_CASE("principalAxis: univariate mean split") {
    const auto s = sample1d({0.0, 1.0, 2.0, 3.0}, {0.0, 0.0, 0.0, 0.0});
    const auto rule = principalAxis(momentsFor(s));
    CHECK(rule.point[0] == doctest::Approx(1.5));
    CHECK(rule.normal[0] == 1.0);
    for (double x : {0.0, 1.0}) CHECK(rule.goesLeft(std::span<const double>(&x, 1)));
    for (double x : {2.0, 3.0}) CHECK_FALSE(rule.goesLeft(std::span<const double>(&x, 1)));
    const double onPlane = 1.5;
    CHECK(rule.goesLeft(std::span<const double>(&onPlane, 1)));
}

TEST_CASE("principalAxis: diagonal points") {
    WeightedSample s(2);
    for (double t : {-2.0, -0.5, 0.0, 1.0, 4.0}) {
        const double x[2] = {t, t};
        s.add(x, 0.0);
    }
    const auto rule = principalAxis(momentsFor(s));
    CHECK(rule.normal[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(rule.normal[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::hypot(rule.normal[0], rule.normal[1]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("principalAxis: rotated anisotropic cloud") {
    Rng rng(30);
    const double angle = std::numbers::pi / 6.0;
    WeightedSample s(2);
    for (int j = 0; j < 10000; ++j) {
        const double u = 3.0 * rng.normal();
        const double v = 1.0 * rng.normal();
        const double x[2] = {5.0 + std::cos(angle) * u - std::sin(angle) * v,
                             -2.0 + std::sin(angle) * u + std::cos(angle) * v};
        s.add(x, 0.0);
    }
    const auto rule = principalAxis(momentsFor(s));

    // Closed-form 2x2 eigenvector of the two-pass empirical covariance.
    double mx = 0, my = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        mx += s.x(j)[0];
        my += s.x(j)[1];
    }
    mx /= s.size();
    my /= s.size();
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double dx = s.x(j)[0] - mx, dy = s.x(j)[1] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
    CHECK(rule.point[0] == doctest::Approx(mx).epsilon(1e-10));
    CHECK(rule.point[1] == doctest::Approx(my).epsilon(1e-10));
    CHECK(rule.normal[0] == doctest::Approx(std::cos(theta)).epsilon(1e-9));
    CHECK(rule.normal[1] == doctest::Approx(std::sin(theta)).epsilon(1e-9));
    const double off = std::acos(std::min(1.0, rule.normal[0] * std::cos(angle) + rule.normal[1] * std::sin(angle)));
    CHECK(off < 2.0 * std::numbers::pi / 180.0);
}

TEST_CASE("principalAxis: errors") {
    const auto same = sample1d({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0});
    CHECK_THROWS_AS(principalAxis(momentsFor(same)), NoSplitError);
    CHECK_THROWS_AS(principalAxis(momentsFor(sample1d({0.0, 1.0}, {0.0, 1.0}), 0)), InputError);
}

TEST_CASE("growTree: globally linear data gives one leaf") {
    Rng rng(40);
    const auto s = randomSample(rng, 2000, 1, -1.0, 1.0, [](auto x) { return 1 + 2 * x[0]; }, 0.1);
    TreeConfig cfg;
    cfg.select.nMax = 1;
    const auto tree = growTree(s, cfg);
    REQUIRE(tree.leafCount() == 1);
    CHECK(tree.nodes[0].leaf->basis.degree() == 1);
    CHECK(tree.nodes[0].leaf->count == 2000);
}

TEST_CASE("growTree: step function") {
    Rng rng(41);
    const auto s = stepSample(rng, 4000);
    TreeConfig cfg;
    cfg.select.nMax = 0;
    const auto tree = growTree(s, cfg);
    CHECK(tree.leafCount() >= 2);
    CHECK(std::abs(tree.nodes[0].rule->point[0]) < 0.05);
    for (int id : tree.leafIds()) {
        const auto& leaf = *tree.nodes[static_cast<std::size_t>(id)].leaf;
        if (leaf.lower[0] < 0.0 && leaf.upper[0] > 0.0) continue;
        const double target = leaf.upper[0] <= 0.0 ? -1.0 : 1.0;
        const double se = std::sqrt(leaf.coeffCov(0, 0));
        CHECK(std::abs(leaf.coeffs(0) - target) <= 3.0 * se);
    }
}

TEST_CASE("growTree: structural invariants") {
    Rng rng(42);
    const auto s = randomSample(rng, 6000, 2, -1.0, 1.0,
                                [](auto x) { return std::sin(4 * x[0]) * std::cos(3 * x[1]); }, 0.1, true);
    TreeConfig cfg;
    cfg.select.nMax = 1;
    cfg.stop.maxDepth = 6;
    const auto tree = growTree(s, cfg);
    const int minLeaf = effectiveMinLeaf(cfg, 2);
    CHECK(minLeaf == 4 * 10);
    CHECK(tree.leafCount() > 1);
    CHECK(tree.depth() <= cfg.stop.maxDepth);

    std::int64_t total = 0;
    for (int id : tree.leafIds()) {
        const auto& leaf = *tree.nodes[static_cast<std::size_t>(id)].leaf;
        total += leaf.count;
        CHECK((leaf.count >= minLeaf || leaf.degenerate));
        CHECK(leaf.basis.degree() <= cfg.select.nMax);
    }
    CHECK(total == static_cast<std::int64_t>(s.size()));

    // Every training point lands in exactly one leaf, and that leaf's box.
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto hits = leavesContaining(tree, s.x(j));
        REQUIRE(hits.size() == 1);
        CHECK(findLeaf(tree, s.x(j)) == hits[0]);
        CHECK_FALSE(predictTree(tree, s.x(j)).extrapolated);
    }

    for (const auto& n : tree.nodes) {
        if (n.isLeaf()) continue;
        CHECK(std::hypot(n.rule->normal[0], n.rule->normal[1]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("growTree: deterministic, independent of thread count") {
    Rng rng(43);
    const auto s = randomSample(rng, 3000, 2, -1.0, 1.0, [](auto x) { return std::abs(x[0] + x[1]); }, 0.05);
    TreeConfig cfg;
    cfg.select.nMax = 0;
    const auto a = growTree(s, cfg);
    cfg.threads = 4;
    const auto b = growTree(s, cfg);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].left == b.nodes[i].left);
        if (a.nodes[i].isLeaf()) {
            CHECK(a.nodes[i].leaf->coeffs == b.nodes[i].leaf->coeffs);
            CHECK(a.nodes[i].leaf->coeffCov == b.nodes[i].leaf->coeffCov);
        } else {
            CHECK(a.nodes[i].rule->point == b.nodes[i].rule->point);
            CHECK(a.nodes[i].rule->normal == b.nodes[i].rule->normal);
        }
    }
}

TEST_CASE("growTree: maxDepth 0 and tiny samples") {
    Rng rng(44);
    const auto s = stepSample(rng, 1000);
    TreeConfig cfg;
    cfg.select.nMax = 0;
    cfg.stop.maxDepth = 0;
    CHECK(growTree(s, cfg).leafCount() == 1);

    const auto one = sample1d({0.5}, {2.0});
    const auto t1 = growTree(one, cfg);
    REQUIRE(t1.leafCount() == 1);
    CHECK(t1.nodes[0].leaf->degenerate);
    CHECK(t1.nodes[0].leaf->coeffs(0) == 2.0);

    const auto zeroW = sample1d({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, {1.0, -2.0, 1.0});
    const auto t2 = growTree(zeroW, cfg);
    CHECK(t2.nodes[0].leaf->degenerate);
    CHECK(t2.nodes[0].leaf->coeffs(0) == doctest::Approx(2.0));

    CHECK_THROWS_AS(growTree(WeightedSample(1), cfg), InputError);
}

TEST_CASE("predictTree: single leaf matches the model, routing matches brute force") {
    Rng rng(45);
    const auto lin = randomSample(rng, 500, 1, -1.0, 1.0, [](auto x) { return 3 * x[0]; }, 0.2);
    TreeConfig cfg;
    cfg.select.nMax = 1;
    const auto single = growTree(lin, cfg);
    REQUIRE(single.leafCount() == 1);
    const auto model = fitPolynomial(lin, single.nodes[0].leaf->basis);
    for (double x : {-0.7, 0.0, 0.33}) {
        const auto a = predictTree(single, std::span<const double>(&x, 1));
        const auto b = predict(model, std::span<const double>(&x, 1));
        CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
        CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-9));
        CHECK(a.leafId == 0);
    }

    const auto s = randomSample(rng, 5000, 2, -1.0, 1.0, [](auto x) { return x[0] > x[1] ? 1.0 : 0.0; }, 0.05);
    cfg.select.nMax = 0;
    const auto tree = growTree(s, cfg);
    REQUIRE(tree.leafCount() > 2);
    std::vector<double> x(2);
    for (int i = 0; i < 100000; ++i) {
        x[0] = rng.uniform(-1.2, 1.2);
        x[1] = rng.uniform(-1.2, 1.2);
        const auto hits = leavesContaining(tree, x);
        REQUIRE(hits.size() == 1);
        CHECK(predictTree(tree, x).leafId == hits[0]);
    }
    // Points exactly on a split plane go left.
    const auto& root = tree.nodes[0];
    CHECK(findLeaf(tree, root.rule->point) == findLeaf(tree, root.rule->point));
    int id = root.left;
    while (!tree.nodes[static_cast<std::size_t>(id)].isLeaf()) {
        const auto& n = tree.nodes[static_cast<std::size_t>(id)];
        id = n.rule->goesLeft(root.rule->point) ? n.left : n.right;
    }
    CHECK(findLeaf(tree, root.rule->point) == id);
}

TEST_CASE("property: one more split never increases the weighted training loss") {
    Rng rng(46);
    for (int t = 0; t < 20; ++t) {
        const auto s = randomSample(rng, 400 + rng.below(2000), 2, -1.0, 1.0,
                                    [](auto x) { return std::exp(x[0]) - x[1] * x[1]; }, 0.3, t % 2 == 1);
        const int degree = static_cast<int>(rng.below(3));
        const auto parent = fitPolynomial(s, degree);
        const auto rule = principalAxis(momentsFor(s));
        std::vector<std::size_t> left, right;
        for (std::size_t j = 0; j < s.size(); ++j) (rule.goesLeft(s.x(j)) ? left : right).push_back(j);
        REQUIRE_FALSE(left.empty());
        REQUIRE_FALSE(right.empty());
        const auto sl = s.select(left), sr = s.select(right);
        const double sw = s.sumWeights(), swl = sl.sumWeights(), swr = sr.sumWeights();
        const double before = sw * parent.lossMin;
        const double after = swl * fitPolynomial(sl, degree).lossMin + swr * fitPolynomial(sr, degree).lossMin;
        CHECK(after <= before + 1e-10 * std::abs(before));
    }
}
