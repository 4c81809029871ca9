#include "polyreg/sample.hpp"

#include <string>

#include "polyreg/error.hpp"

namespace polyreg {

WeightedSample::WeightedSample(std::size_t dim) : dim_(dim) {
    if (dim == 0) {
        throw InputError("sample dimension must be positive");
    }
}

void WeightedSample::add(std::span<const double> x, double y, double w) {
    if (x.size() != dim_) {
        throw InputError("point has dimension " + std::to_string(x.size()) +
                         ", sample expects " + std::to_string(dim_));
    }
    xs_.insert(xs_.end(), x.begin(), x.end());
    ys_.push_back(y);
    ws_.push_back(w);
}

void WeightedSample::reserve(std::size_t n) {
    xs_.reserve(n * dim_);
    ys_.reserve(n);
    ws_.reserve(n);
}

double WeightedSample::sumWeights() const {
    double s = 0.0;
    for (double w : ws_) s += w;
    return s;
}

WeightedSample WeightedSample::select(std::span<const std::size_t> indices) const {
    WeightedSample out(dim_);
    out.reserve(indices.size());
    for (std::size_t j : indices) out.add(x(j), ys_[j], ws_[j]);
    return out;
}

}  // namespace polyreg
