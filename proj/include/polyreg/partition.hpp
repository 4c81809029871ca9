#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyreg/basis.hpp"
#include "polyreg/modelselect.hpp"
#include "polyreg/moments.hpp"
#include "polyreg/sample.hpp"

namespace polyreg {

// Hyperplane through the region mean, perpendicular to its principal axis.
struct SplitRule {
    std::vector<double> point;
    std::vector<double> normal;

    // Points on the plane go left.
    bool goesLeft(std::span<const double> x) const;
};

// Mean and top eigenvector of <x_a x_b> - <x_a><x_b>, read from the degree
// 1 and 2 moments of `pv` and mapped back to physical coordinates. The
// eigenvector sign makes its largest-magnitude component positive.
// Throws NoSplitError when the covariance vanishes, InputError when pv has
// no second moments (degree 0).
SplitRule principalAxis(const ParameterVector& pv);

struct StopCriteria {
    // Minimum points per leaf; <= 0 selects 4 * basisSize(dim, scanMax).
    int minLeaf = 0;
    int maxDepth = 24;
};

struct TreeConfig {
    SelectConfig select;
    StopCriteria stop;
    // Sub-regions are grown concurrently up to this many threads.
    int threads = 1;
};

// Fitted polynomial of one region. Predictions only need basis, coeffs and
// covFactor, so deserialized leaves behave exactly like freshly grown ones.
struct LeafModel {
    BasisSpec basis;
    Eigen::VectorXd coeffs;
    Eigen::MatrixXd coeffCov;
    CovarianceFactor covFactor;
    std::int64_t count = 0;
    double lossMin = 0.0;
    // Physical bounding box of the region's training points.
    std::vector<double> lower;
    std::vector<double> upper;
    FitDiagnostics diagnostics;
    // Argmin of the degree scan; may exceed nMax when a stop criterion fired.
    int scanOptimum = 0;
    // Constant fallback used because the region could not be fitted.
    bool degenerate = false;
    std::string note;
    std::vector<DegreeReport> reports;
};

struct RegionNode {
    std::optional<SplitRule> rule;
    int left = -1;
    int right = -1;
    int depth = 0;
    std::optional<LeafModel> leaf;

    bool isLeaf() const noexcept { return leaf.has_value(); }
};

// Nodes in preorder; nodes[0] is the root.
struct RegionTree {
    int dim = 0;
    TreeConfig config;
    std::vector<RegionNode> nodes;

    std::size_t leafCount() const;
    int depth() const;
    std::vector<int> leafIds() const;
    // Sum over leaves of count * lossMin, divided by the total count.
    double totalLoss() const;
};

// Effective minimum leaf size for a configuration and input dimension.
int effectiveMinLeaf(const TreeConfig& cfg, int dim);

// At each node: standardize, scan degrees 0..nMax+scanExtra, and either emit
// a leaf (chosen <= nMax or a stop criterion fires; the leaf keeps the best
// degree <= nMax) or split along the principal axis and recurse.
RegionTree growTree(const WeightedSample& sample, const TreeConfig& cfg);

struct TreePrediction {
    double value = 0.0;
    double variance = 0.0;
    int leafId = -1;
    bool extrapolated = false;
};

int findLeaf(const RegionTree& tree, std::span<const double> x);
TreePrediction predictTree(const RegionTree& tree, std::span<const double> x);

// Prediction of a single leaf at a physical point.
TreePrediction predictLeaf(const LeafModel& leaf, std::span<const double> x);

}  // namespace polyreg
