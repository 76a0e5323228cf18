#include "switchavg/measures.hpp"

#include "switchavg/hybrid_sde.hpp"

namespace switchavg {

Matrix random_directions(Index dim, Index count, std::uint64_t seed) {
    RandomStream stream(seed, 0, StreamKind::projection);
    Matrix dirs(dim, count);
    for (Index k = 0; k < count; ++k) {
        double norm = 0.0;
        do {
            for (Index i = 0; i < dim; ++i) dirs(i, k) = stream.normal();
            norm = dirs.col(k).norm();
        } while (norm < 1e-12);
        dirs.col(k) /= norm;
    }
    return dirs;
}

std::size_t GridHistogram::cell_index(const std::vector<int>& cell) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < bins.size(); ++a) idx = idx * static_cast<std::size_t>(bins[a]) + static_cast<std::size_t>(cell[a]);
    return idx;
}

GridHistogram histogram(const Measure& mu, const Box& box, const std::vector<int>& bins) {
    require(box.dim() == mu.dim() && box.hi.size() == mu.dim(), "histogram: box dimension mismatch");
    require(static_cast<Index>(bins.size()) == mu.dim(), "histogram: one bin count per axis");
    for (Index a = 0; a < box.dim(); ++a) {
        require(bins[static_cast<std::size_t>(a)] >= 1, "histogram: bins must be >= 1");
        require(box.hi(a) > box.lo(a), "histogram: degenerate box on axis " + std::to_string(a + 1));
    }
    GridHistogram h;
    h.box = box;
    h.bins = bins;
    std::size_t cells = 1;
    for (int b : bins) cells *= static_cast<std::size_t>(b);
    h.masses.assign(cells, 0.0);
    std::vector<int> cell(bins.size());
    for (Index k = 0; k < mu.size(); ++k) {
        const auto x = mu.points().col(k);
        bool inside = true;
        for (Index a = 0; a < mu.dim() && inside; ++a) {
            const double u = (x(a) - box.lo(a)) / (box.hi(a) - box.lo(a));
            if (!(u >= 0.0 && u <= 1.0)) {
                inside = false;
                break;
            }
            const int b = bins[static_cast<std::size_t>(a)];
            cell[static_cast<std::size_t>(a)] = std::min(b - 1, static_cast<int>(u * b));
        }
        if (inside) {
            h.masses[h.cell_index(cell)] += mu.weights()(k);
        } else {
            h.outside += mu.weights()(k);
        }
    }
    return h;
}

OccupationAccumulator::OccupationAccumulator(int dim, double burn_in, int stride)
    : dim_(dim), burn_in_(burn_in), stride_(stride) {
    require(stride >= 1, "occupation: stride must be >= 1");
}

void OccupationAccumulator::add(double t, const Eigen::Ref<const Vector>& x, bool on_grid) {
    if (!on_grid || t < burn_in_) return;
    if (seen_++ % static_cast<std::size_t>(stride_) != 0) return;
    data_.insert(data_.end(), x.data(), x.data() + x.size());
    ++count_;
}

Measure OccupationAccumulator::measure() const {
    if (count_ == 0) throw ValidationError("occupation: no grid states after burn-in");
    Matrix pts = Eigen::Map<const Matrix>(data_.data(), dim_, static_cast<Index>(count_));
    return Measure::uniform(std::move(pts));
}

Measure empirical_occupation(const Trajectory& traj, double burn_in, int stride) {
    require(traj.size() > 0 && burn_in < traj.times.back(), "occupation: burn-in must be shorter than the horizon");
    OccupationAccumulator acc(traj.dim, burn_in, stride);
    for (std::size_t k = 0; k < traj.size(); ++k) acc.add(traj.times[k], traj.state(k), traj.on_grid[k] != 0);
    return acc.measure();
}

}  // namespace switchavg
