#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace polyreg {

// Training data stored row-major: x of point j occupies
// xs[j*dim .. j*dim+dim).
class WeightedSample {
public:
    WeightedSample() = default;
    explicit WeightedSample(std::size_t dim);

    void add(std::span<const double> x, double y, double w = 1.0);
    void reserve(std::size_t n);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ys_.size(); }
    bool empty() const noexcept { return ys_.empty(); }

    std::span<const double> x(std::size_t j) const {
        return {xs_.data() + j * dim_, dim_};
    }
    double y(std::size_t j) const { return ys_[j]; }
    double w(std::size_t j) const { return ws_[j]; }

    double sumWeights() const;

    // Subset in the given order.
    WeightedSample select(std::span<const std::size_t> indices) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> ws_;
};

}  // namespace polyreg
