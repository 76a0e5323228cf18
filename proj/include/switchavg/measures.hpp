#pragma once

#include "switchavg/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace switchavg {

struct Trajectory;

/// Weighted atoms in R^d; points are stored column-wise.
template <typename Scalar>
class DiscreteMeasure {
public:
    using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using WeightVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    DiscreteMeasure() = default;

    DiscreteMeasure(PointMatrix points, WeightVector weights) : points_(std::move(points)), weights_(std::move(weights)) {
        require(points_.cols() == weights_.size(), "measure: one weight per atom");
        require(points_.cols() > 0, "measure: no atoms");
        require((weights_.array() > Scalar(0)).all(), "measure: weights must be positive");
        using std::abs;
        require(abs(static_cast<double>(weights_.sum()) - 1.0) <= 1e-9, "measure: weights must sum to 1");
    }

    static DiscreteMeasure uniform(PointMatrix points) {
        const Index n = points.cols();
        require(n > 0, "measure: no atoms");
        WeightVector w = WeightVector::Constant(n, Scalar(1) / static_cast<Scalar>(n));
        return DiscreteMeasure(std::move(points), std::move(w));
    }

    Index dim() const { return points_.rows(); }
    Index size() const { return points_.cols(); }
    bool empty() const { return points_.cols() == 0; }
    const PointMatrix& points() const { return points_; }
    const WeightVector& weights() const { return weights_; }

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean() const { return points_ * weights_; }

    DiscreteMeasure translated(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& shift) const {
        return DiscreteMeasure(points_.colwise() + shift, weights_);
    }

    /// Keeps every stride-th atom and renormalizes.
    DiscreteMeasure thinned(Index stride) const {
        require(stride >= 1, "measure: stride must be >= 1");
        const Index n = (size() + stride - 1) / stride;
        PointMatrix p(dim(), n);
        WeightVector w(n);
        for (Index k = 0; k < n; ++k) {
            p.col(k) = points_.col(k * stride);
            w(k) = weights_(k * stride);
        }
        w /= w.sum();
        return DiscreteMeasure(std::move(p), std::move(w));
    }

private:
    PointMatrix points_;
    WeightVector weights_;
};

using Measure = DiscreteMeasure<double>;

/// Exact W1 between two weighted atom sets on the line: integral of |F - G|.
template <typename Scalar>
Scalar wasserstein1_1d(std::vector<std::pair<Scalar, Scalar>> a, std::vector<std::pair<Scalar, Scalar>> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    Scalar cdf_a(0), cdf_b(0), total(0);
    Scalar x = std::min(a.front().first, b.front().first);
    while (i < a.size() || j < b.size()) {
        const Scalar next = (j >= b.size() || (i < a.size() && a[i].first <= b[j].first)) ? a[i].first : b[j].first;
        using std::abs;
        total += abs(cdf_a - cdf_b) * (next - x);
        x = next;
        while (i < a.size() && a[i].first == x) cdf_a += a[i++].second;
        while (j < b.size() && b[j].first == x) cdf_b += b[j++].second;
    }
    return total;
}

/// Unit directions drawn uniformly on the sphere, one per column.
Matrix random_directions(Index dim, Index count, std::uint64_t seed);

/// Mean over random unit directions of the 1-D W1 between the projected measures.
template <typename Scalar>
Scalar sliced_wasserstein(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu, Index n_proj,
                          std::uint64_t seed) {
    require(!mu.empty() && !nu.empty(), "sliced Wasserstein: empty measure");
    require(mu.dim() == nu.dim(), "sliced Wasserstein: dimension mismatch");
    require(n_proj >= 1, "sliced Wasserstein: n_proj must be >= 1");
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dirs =
        random_directions(mu.dim(), n_proj, seed).template cast<Scalar>();
    const auto pa = (dirs.transpose() * mu.points()).eval();
    const auto pb = (dirs.transpose() * nu.points()).eval();
    Scalar total(0);
    std::vector<std::pair<Scalar, Scalar>> a(static_cast<std::size_t>(mu.size()));
    std::vector<std::pair<Scalar, Scalar>> b(static_cast<std::size_t>(nu.size()));
    for (Index k = 0; k < n_proj; ++k) {
        for (Index i = 0; i < mu.size(); ++i) a[static_cast<std::size_t>(i)] = {pa(k, i), mu.weights()(i)};
        for (Index i = 0; i < nu.size(); ++i) b[static_cast<std::size_t>(i)] = {pb(k, i), nu.weights()(i)};
        total += wasserstein1_1d(a, b);
    }
    return total / static_cast<Scalar>(n_proj);
}

/// 2E|X - Y| - E|X - X'| - E|Y - Y'| over weighted atom pairs.
template <typename Scalar>
Scalar energy_distance(const DiscreteMeasure<Scalar>& mu, const DiscreteMeasure<Scalar>& nu) {
    require(!mu.empty() && !nu.empty(), "energy distance: empty measure");
    require(mu.dim() == nu.dim(), "energy distance: dimension mismatch");
    auto cross = [](const DiscreteMeasure<Scalar>& p, const DiscreteMeasure<Scalar>& q) {
        Scalar acc(0);
        for (Index i = 0; i < p.size(); ++i) {
            Scalar row(0);
            for (Index j = 0; j < q.size(); ++j) row += q.weights()(j) * (p.points().col(i) - q.points().col(j)).norm();
            acc += p.weights()(i) * row;
        }
        return acc;
    };
    const Scalar value = Scalar(2) * cross(mu, nu) - cross(mu, mu) - cross(nu, nu);
    return std::max(value, Scalar(0));
}

struct GridHistogram {
    Box box;
    std::vector<int> bins;
    std::vector<double> masses;  // row-major over axes, first axis slowest
    double outside = 0.0;

    std::size_t cell_index(const std::vector<int>& cell) const;
    double mass(const std::vector<int>& cell) const { return masses[cell_index(cell)]; }
    double total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
};

GridHistogram histogram(const Measure& mu, const Box& box, const std::vector<int>& bins);

/// Equal-weight atoms at grid states with t >= burn_in, every stride-th one.
Measure empirical_occupation(const Trajectory& traj, double burn_in, int stride);

/// Streaming version used when paths are too long to record.
class OccupationAccumulator {
public:
    OccupationAccumulator(int dim, double burn_in, int stride);
    void add(double t, const Eigen::Ref<const Vector>& x, bool on_grid);
    std::size_t size() const { return count_; }
    Measure measure() const;

private:
    int dim_;
    double burn_in_;
    int stride_;
    std::size_t seen_ = 0;
    std::size_t count_ = 0;
    std::vector<double> data_;
};

}  // namespace switchavg
