#include "switchavg/ctmc.hpp"

#include <algorithm>

namespace switchavg {

Generator::Generator(Matrix rates) : rates_(std::move(rates)) { detail::validate_generator_matrix(rates_); }

Generator Generator::from_rows(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), "generator: no rows");
    const std::size_t m = rows.size();
    Matrix q(static_cast<Index>(m), static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        require(rows[i].size() == m, "generator row " + std::to_string(i + 1) + ": expected " + std::to_string(m) +
                                         " entries, got " + std::to_string(rows[i].size()));
        for (std::size_t j = 0; j < m; ++j) q(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return Generator(std::move(q));
}

bool check_irreducible(const Generator& q) { return check_irreducible(q.rates()); }

Vector stationary_distribution(const Generator& q) { return stationary_distribution(q.rates()); }

StateDependentGenerator::StateDependentGenerator(int size, RateFunction rates, double exit_rate_bound)
    : size_(size), rates_(std::move(rates)), bound_(exit_rate_bound) {
    require(size_ >= 1, "state-dependent generator: size must be positive");
    require(static_cast<bool>(rates_), "state-dependent generator: missing rate function");
    require(std::isfinite(bound_) && bound_ > 0.0, "state-dependent generator: bound must be finite and positive");
}

Matrix StateDependentGenerator::at(const Eigen::Ref<const Vector>& x) const {
    Matrix q = rates_(x);
    require(q.rows() == size_ && q.cols() == size_, "state-dependent generator: wrong matrix size");
    detail::validate_generator_matrix(q);
    for (int i = 0; i < size_; ++i) {
        require(-q(i, i) <= bound_ * (1.0 + 1e-12), "state-dependent generator: |q_ii(x)| exceeds the declared bound");
    }
    return q;
}

void StateDependentGenerator::probe(const Eigen::Ref<const Matrix>& points) const {
    for (Index k = 0; k < points.cols(); ++k) {
        const Matrix q = at(points.col(k));
        require(size_ == 1 || check_irreducible(q), "state-dependent generator: reducible at a probe point");
    }
}

int switching_size(const Switching& s) {
    return std::visit([](const auto& g) { return g.size(); }, s);
}

Vector stationary_at(const Switching& s, const Eigen::Ref<const Vector>& x) {
    if (const auto* g = std::get_if<Generator>(&s)) {
        if (g->size() == 1) return Vector::Ones(1);
        return stationary_distribution(*g);
    }
    const auto& sd = std::get<StateDependentGenerator>(s);
    if (sd.size() == 1) return Vector::Ones(1);
    return stationary_distribution(sd.at(x));
}

int JumpSkeleton::state_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times.begin()) - 1));
    return states[k];
}

namespace {

int route(const Eigen::Ref<const Matrix>& q, int from, double u) {
    const double total = -q(from, from);
    double acc = 0.0;
    int last = from;
    for (int j = 0; j < q.rows(); ++j) {
        if (j == from || q(from, j) <= 0.0) continue;
        acc += q(from, j);
        last = j;
        if (u * total < acc) return j;
    }
    return last;
}

}  // namespace

ConstantRateClock::ConstantRateClock(const Generator& q, double eps, int i0, double t0, RandomStream& stream)
    : q_(&q), eps_(eps), state_(i0), next_(0.0), stream_(&stream) {
    require(eps > 0.0, "switching clock: eps must be positive");
    require(i0 >= 0 && i0 < q.size(), "switching clock: initial regime out of range");
    schedule(t0);
}

void ConstantRateClock::schedule(double now) {
    const double rate = q_->exit_rate(state_);
    next_ = rate > 0.0 ? now + stream_->exponential(rate / eps_) : std::numeric_limits<double>::infinity();
}

void ConstantRateClock::fire(const Eigen::Ref<const Vector>&) {
    const double now = next_;
    state_ = route(q_->rates(), state_, stream_->uniform());
    schedule(now);
}

ThinningClock::ThinningClock(const StateDependentGenerator& q, double eps, int i0, double t0, RandomStream& stream)
    : q_(&q), eps_(eps), state_(i0), next_(0.0), stream_(&stream) {
    require(eps > 0.0, "switching clock: eps must be positive");
    require(i0 >= 0 && i0 < q.size(), "switching clock: initial regime out of range");
    next_ = q.size() > 1 ? t0 + stream_->exponential(q.bound() / eps) : std::numeric_limits<double>::infinity();
}

void ThinningClock::fire(const Eigen::Ref<const Vector>& x) {
    const Matrix q = q_->at(x);
    const double accept = -q(state_, state_) / q_->bound();
    if (stream_->uniform() < accept) state_ = route(q, state_, stream_->uniform());
    next_ += stream_->exponential(q_->bound() / eps_);
}

SkeletonClock::SkeletonClock(const JumpSkeleton& skeleton) : skeleton_(&skeleton) {
    require(!skeleton.states.empty() && skeleton.states.size() == skeleton.times.size(), "skeleton: malformed");
}

double SkeletonClock::next_event() const {
    return k_ + 1 < skeleton_->times.size() ? skeleton_->times[k_ + 1] : std::numeric_limits<double>::infinity();
}

void SkeletonClock::fire(const Eigen::Ref<const Vector>&) {
    if (k_ + 1 < skeleton_->times.size()) ++k_;
}

std::unique_ptr<SwitchingClock> make_clock(const Switching& s, double eps, int i0, double t0, RandomStream& stream) {
    if (const auto* g = std::get_if<Generator>(&s)) return std::make_unique<ConstantRateClock>(*g, eps, i0, t0, stream);
    return std::make_unique<ThinningClock>(std::get<StateDependentGenerator>(s), eps, i0, t0, stream);
}

JumpSkeleton sample_jump_skeleton(const Generator& q, double eps, int i0, double horizon, RandomStream& stream) {
    require(horizon > 0.0, "jump skeleton: horizon must be positive");
    require(q.size() == 1 || check_irreducible(q), "jump skeleton: generator must be irreducible");
    ConstantRateClock clock(q, eps, i0, 0.0, stream);
    JumpSkeleton skel;
    skel.horizon = horizon;
    skel.n_states = q.size();
    skel.times.push_back(0.0);
    skel.states.push_back(i0);
    const Vector unused(0);
    while (clock.next_event() <= horizon) {
        const double t = clock.next_event();
        clock.fire(unused);
        skel.times.push_back(t);
        skel.states.push_back(clock.regime());
    }
    return skel;
}

Vector occupation_fractions(const JumpSkeleton& skeleton) {
    require(skeleton.horizon > 0.0, "occupation fractions: horizon must be positive");
    Vector frac = Vector::Zero(skeleton.n_states);
    for (std::size_t k = 0; k < skeleton.times.size(); ++k) {
        const double end = k + 1 < skeleton.times.size() ? skeleton.times[k + 1] : skeleton.horizon;
        frac(skeleton.states[k]) += end - skeleton.times[k];
    }
    return frac / skeleton.horizon;
}

}  // namespace switchavg
