#include "polyreg/partition.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>

#include <Eigen/Eigenvalues>

#include "polyreg/error.hpp"

namespace polyreg {

bool SplitRule::goesLeft(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < normal.size(); ++k) s += (x[k] - point[k]) * normal[k];
    return s <= 0.0;
}

SplitRule principalAxis(const ParameterVector& pv) {
    if (pv.degree < 1) throw InputError("principal axis needs second moments (degree >= 1)");
    const auto dim = static_cast<Eigen::Index>(pv.affine.dim());
    const MonomialSet& mono = *pv.monomials;

    Eigen::VectorXd mean(dim);
    Eigen::MatrixXd cov(dim, dim);
    std::vector<int> e(static_cast<std::size_t>(dim), 0);
    for (Eigen::Index a = 0; a < dim; ++a) {
        e[static_cast<std::size_t>(a)] = 1;
        mean(a) = pv.g(mono.indexOf(e));
        e[static_cast<std::size_t>(a)] = 0;
    }
    for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = a; b < dim; ++b) {
            ++e[static_cast<std::size_t>(a)];
            ++e[static_cast<std::size_t>(b)];
            const double c = pv.g(mono.indexOf(e)) - mean(a) * mean(b);
            --e[static_cast<std::size_t>(a)];
            --e[static_cast<std::size_t>(b)];
            cov(a, b) = c;
            cov(b, a) = c;
        }
    }
    // Back to physical coordinates: z = S (x - mu).
    Eigen::VectorXd invScale(dim);
    for (Eigen::Index a = 0; a < dim; ++a) invScale(a) = 1.0 / pv.affine.scale[static_cast<std::size_t>(a)];
    cov = invScale.asDiagonal() * cov * invScale.asDiagonal();

    SplitRule rule;
    rule.point.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index a = 0; a < dim; ++a) {
        rule.point[static_cast<std::size_t>(a)] = pv.affine.center[static_cast<std::size_t>(a)] + mean(a) * invScale(a);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NoSplitError("eigen decomposition of the input covariance failed");
    const double top = eig.eigenvalues()(dim - 1);
    if (!(top > 0.0)) throw NoSplitError("region has no spread along any axis");
    Eigen::VectorXd v = eig.eigenvectors().col(dim - 1);
    v.normalize();
    Eigen::Index big = 0;
    for (Eigen::Index a = 1; a < dim; ++a) {
        if (std::abs(v(a)) > std::abs(v(big))) big = a;
    }
    if (v(big) < 0.0) v = -v;
    rule.normal.assign(v.data(), v.data() + dim);
    return rule;
}

std::size_t RegionTree::leafCount() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.isLeaf(); }));
}

int RegionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

std::vector<int> RegionTree::leafIds() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].isLeaf()) ids.push_back(static_cast<int>(i));
    }
    return ids;
}

double RegionTree::totalLoss() const {
    double loss = 0.0;
    std::int64_t n = 0;
    for (const auto& node : nodes) {
        if (!node.isLeaf()) continue;
        loss += static_cast<double>(node.leaf->count) * node.leaf->lossMin;
        n += node.leaf->count;
    }
    return n > 0 ? loss / static_cast<double>(n) : 0.0;
}

int effectiveMinLeaf(const TreeConfig& cfg, int dim) {
    if (cfg.stop.minLeaf > 0) return cfg.stop.minLeaf;
    return static_cast<int>(4 * basisSize(dim, cfg.select.scanMax()));
}

namespace {

struct BuildNode {
    std::optional<SplitRule> rule;
    std::unique_ptr<BuildNode> left;
    std::unique_ptr<BuildNode> right;
    std::optional<LeafModel> leaf;
};

void boundingBox(const WeightedSample& s, LeafModel& leaf) {
    leaf.lower.assign(s.dim(), std::numeric_limits<double>::infinity());
    leaf.upper.assign(s.dim(), -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto x = s.x(j);
        for (std::size_t k = 0; k < s.dim(); ++k) {
            leaf.lower[k] = std::min(leaf.lower[k], x[k]);
            leaf.upper[k] = std::max(leaf.upper[k], x[k]);
        }
    }
}

LeafModel constantFallback(const WeightedSample& s, const std::string& why) {
    double sw = 0.0;
    double swy = 0.0;
    double sy = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        sw += s.w(j);
        swy += s.w(j) * s.y(j);
        sy += s.y(j);
    }
    const double value = sw != 0.0 ? swy / sw : (s.empty() ? 0.0 : sy / static_cast<double>(s.size()));
    LeafModel leaf{BasisSpec(0, AffineMap::standardizing(s)), Eigen::VectorXd::Constant(1, value),
                   Eigen::MatrixXd::Zero(1, 1), CovarianceFactor::zero(1)};
    leaf.count = static_cast<std::int64_t>(s.size());
    double loss = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) loss += (s.y(j) - value) * (s.y(j) - value);
    leaf.lossMin = s.empty() ? 0.0 : loss / static_cast<double>(s.size());
    leaf.degenerate = true;
    leaf.note = why;
    boundingBox(s, leaf);
    return leaf;
}

LeafModel leafFromSelection(const Selection& sel, const SelectConfig& cfg, const WeightedSample& s) {
    int degree = sel.chosen;
    if (degree > cfg.nMax) {
        double best = std::numeric_limits<double>::infinity();
        degree = 0;
        for (const auto& r : sel.reports) {
            if (r.excluded || r.degree > cfg.nMax) break;
            const double obj = r.expectedLoss + cfg.significance * r.sigma;
            if (obj < best) {
                best = obj;
                degree = r.degree;
            }
        }
    }
    const PolynomialModel& m = sel.model(degree);
    LeafModel leaf{m.basis, m.coeffs, m.coeffCov, m.covFactor};
    leaf.count = static_cast<std::int64_t>(s.size());
    leaf.lossMin = m.lossMin;
    leaf.diagnostics = m.diagnostics;
    leaf.scanOptimum = sel.chosen;
    leaf.reports = sel.reports;
    boundingBox(s, leaf);
    return leaf;
}

class Builder {
public:
    Builder(const WeightedSample& sample, const TreeConfig& cfg)
        : sample_(sample), cfg_(cfg), minLeaf_(effectiveMinLeaf(cfg, static_cast<int>(sample.dim()))) {
        int parallelDepth = 0;
        while ((1 << (parallelDepth + 1)) <= cfg.threads) ++parallelDepth;
        parallelDepth_ = parallelDepth;
    }

    std::unique_ptr<BuildNode> build(const std::vector<std::size_t>& idx, int depth) const {
        auto node = std::make_unique<BuildNode>();
        const WeightedSample sub = sample_.select(idx);
        if (sub.size() < 2) {
            node->leaf = constantFallback(sub, "fewer than two points");
            return node;
        }
        const BasisSpec basis(cfg_.select.scanMax(), AffineMap::standardizing(sub));
        std::optional<ParameterVector> pv;
        Selection sel;
        try {
            pv = parameterVector(accumulate(sub, basis));
            sel = selectDegree(*pv, cfg_.select);
        } catch (const NumericalError& e) {
            node->leaf = constantFallback(sub, e.what());
            return node;
        }

        const bool wantSplit = sel.escalate && depth < cfg_.stop.maxDepth &&
                               sub.size() >= 2 * static_cast<std::size_t>(minLeaf_);
        if (wantSplit) {
            try {
                SplitRule rule = principalAxis(*pv);
                std::vector<std::size_t> left;
                std::vector<std::size_t> right;
                for (std::size_t j : idx) (rule.goesLeft(sample_.x(j)) ? left : right).push_back(j);
                if (left.size() >= static_cast<std::size_t>(minLeaf_) &&
                    right.size() >= static_cast<std::size_t>(minLeaf_)) {
                    node->rule = std::move(rule);
                    if (depth < parallelDepth_) {
                        auto fut = std::async(std::launch::async, [&] { return build(left, depth + 1); });
                        node->right = build(right, depth + 1);
                        node->left = fut.get();
                    } else {
                        node->left = build(left, depth + 1);
                        node->right = build(right, depth + 1);
                    }
                    return node;
                }
            } catch (const NoSplitError&) {
            }
        }
        node->leaf = leafFromSelection(sel, cfg_.select, sub);
        return node;
    }

private:
    const WeightedSample& sample_;
    const TreeConfig& cfg_;
    int minLeaf_;
    int parallelDepth_ = 0;
};

void flatten(BuildNode& b, int depth, std::vector<RegionNode>& out) {
    const auto self = out.size();
    out.emplace_back();
    out[self].depth = depth;
    if (b.leaf) {
        out[self].leaf = std::move(b.leaf);
        return;
    }
    out[self].rule = std::move(b.rule);
    out[self].left = static_cast<int>(out.size());
    flatten(*b.left, depth + 1, out);
    out[self].right = static_cast<int>(out.size());
    flatten(*b.right, depth + 1, out);
}

}  // namespace

RegionTree growTree(const WeightedSample& sample, const TreeConfig& cfg) {
    if (sample.empty()) throw InputError("cannot grow a tree on an empty sample");
    cfg.select.validate();
    if (cfg.stop.maxDepth < 0) throw InputError("maxDepth must be >= 0");
    std::vector<std::size_t> idx(sample.size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    auto root = Builder(sample, cfg).build(idx, 0);
    RegionTree tree;
    tree.dim = static_cast<int>(sample.dim());
    tree.config = cfg;
    flatten(*root, 0, tree.nodes);
    return tree;
}

int findLeaf(const RegionTree& tree, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(tree.dim)) {
        throw InputError("point dimension " + std::to_string(x.size()) + " does not match tree dimension " +
                         std::to_string(tree.dim));
    }
    int i = 0;
    while (!tree.nodes[static_cast<std::size_t>(i)].isLeaf()) {
        const auto& n = tree.nodes[static_cast<std::size_t>(i)];
        i = n.rule->goesLeft(x) ? n.left : n.right;
    }
    return i;
}

TreePrediction predictLeaf(const LeafModel& leaf, std::span<const double> x) {
    const Prediction p = predictFromCoefficients(leaf.basis, leaf.coeffs, leaf.covFactor, x);
    TreePrediction out{p.value, p.variance, -1, false};
    for (std::size_t k = 0; k < x.size() && k < leaf.lower.size(); ++k) {
        if (x[k] < leaf.lower[k] || x[k] > leaf.upper[k]) out.extrapolated = true;
    }
    return out;
}

TreePrediction predictTree(const RegionTree& tree, std::span<const double> x) {
    const int id = findLeaf(tree, x);
    TreePrediction out = predictLeaf(*tree.nodes[static_cast<std::size_t>(id)].leaf, x);
    out.leafId = id;
    return out;
}

}  // namespace polyreg
