#pragma once

#include "switchavg/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace switchavg {

namespace detail {

template <typename Derived>
void validate_generator_matrix(const Eigen::MatrixBase<Derived>& q, double tol = 1e-12) {
    using std::abs;
    require(q.rows() > 0 && q.rows() == q.cols(), "generator must be a nonempty square matrix");
    for (Index i = 0; i < q.rows(); ++i) {
        double row_sum = 0.0;
        double scale = 1.0;
        for (Index j = 0; j < q.cols(); ++j) {
            const double v = static_cast<double>(q(i, j));
            require(std::isfinite(v), "generator row " + std::to_string(i + 1) + ": non-finite rate");
            if (i != j) {
                require(v >= 0.0, "generator row " + std::to_string(i + 1) + ": negative off-diagonal rate at column " +
                                      std::to_string(j + 1));
            }
            row_sum += v;
            scale = std::max(scale, abs(v));
        }
        require(abs(row_sum) <= tol * scale,
                "generator row " + std::to_string(i + 1) + ": row sum " + std::to_string(row_sum) + " is not zero");
    }
}

}  // namespace detail

/// True iff the directed graph with edges {(i,j): q_ij > 0, i != j} is strongly connected.
template <typename Derived>
bool check_irreducible(const Eigen::MatrixBase<Derived>& q) {
    detail::validate_generator_matrix(q);
    const Index m = q.rows();
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(m), 0);
        std::vector<Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const Index i = stack.back();
            stack.pop_back();
            for (Index j = 0; j < m; ++j) {
                const double rate = transpose ? q(j, i) : q(i, j);
                if (j != i && rate > 0 && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
    };
    return reaches_all(false) && reaches_all(true);
}

/// Solves nu Q = 0, sum(nu) = 1 with one balance equation replaced by the
/// normalization row.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> stationary_distribution(const Eigen::MatrixBase<Derived>& q) {
    using Scalar = typename Derived::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require(check_irreducible(q), "stationary distribution requires an irreducible generator");
    const Index m = q.rows();
    Mat system = q.transpose();
    system.row(m - 1).setOnes();
    Vec rhs = Vec::Zero(m);
    rhs(m - 1) = Scalar(1);
    const Vec nu = system.fullPivLu().solve(rhs);
    const double scale = 1.0 + static_cast<double>(q.cwiseAbs().rowwise().sum().maxCoeff());
    const double residual = static_cast<double>((nu.transpose() * q).cwiseAbs().maxCoeff());
    if (!(residual <= 1e-12 * scale) || !(nu.array() > Scalar(0)).all()) {
        throw NumericError("stationary solve failed (residual " + std::to_string(residual) + ")");
    }
    return nu;
}

/// Constant-rate generator Q of the switching chain (rates before the 1/eps speedup).
class Generator {
public:
    Generator() = default;
    explicit Generator(Matrix rates);

    /// Row-major rows as read from a config; errors name the offending row.
    static Generator from_rows(const std::vector<std::vector<double>>& rows);

    int size() const { return static_cast<int>(rates_.rows()); }
    const Matrix& rates() const { return rates_; }
    double rate(int i, int j) const { return rates_(i, j); }
    double exit_rate(int i) const { return -rates_(i, i); }

private:
    Matrix rates_;
};

bool check_irreducible(const Generator& q);
Vector stationary_distribution(const Generator& q);

/// x -> Q(x), dominated by a global bound on the exit rates.
class StateDependentGenerator {
public:
    using RateFunction = std::function<Matrix(const Eigen::Ref<const Vector>&)>;

    StateDependentGenerator(int size, RateFunction rates, double exit_rate_bound);

    int size() const { return size_; }
    double bound() const { return bound_; }
    /// Q(x), validated as a generator and against the bound.
    Matrix at(const Eigen::Ref<const Vector>& x) const;
    /// Checks the generator invariants at every probe column of `points`.
    void probe(const Eigen::Ref<const Matrix>& points) const;

private:
    int size_;
    RateFunction rates_;
    double bound_;
};

using Switching = std::variant<Generator, StateDependentGenerator>;

int switching_size(const Switching& s);
/// Stationary law of the chain; for state-dependent chains, of Q(x).
Vector stationary_at(const Switching& s, const Eigen::Ref<const Vector>& x);

/// Jump record of alpha^eps on [0, horizon].
struct JumpSkeleton {
    std::vector<double> times;  // times[0] == 0
    std::vector<int> states;    // states[k] held on [times[k], times[k+1])
    double horizon = 0.0;
    int n_states = 1;

    int state_at(double t) const;
    std::size_t jumps() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Event source driving regime changes inside the path integrator.
class SwitchingClock {
public:
    virtual ~SwitchingClock() = default;
    /// Absolute time of the next candidate event; +inf when none.
    virtual double next_event() const = 0;
    /// Processes the candidate event at next_event() given the current state.
    virtual void fire(const Eigen::Ref<const Vector>& x) = 0;
    virtual int regime() const = 0;
};

/// Holding times Exp(|q_ii|/eps), routing by q_ij/|q_ii|.
class ConstantRateClock final : public SwitchingClock {
public:
    ConstantRateClock(const Generator& q, double eps, int i0, double t0, RandomStream& stream);
    double next_event() const override { return next_; }
    void fire(const Eigen::Ref<const Vector>& x) override;
    int regime() const override { return state_; }

private:
    void schedule(double now);

    const Generator* q_;
    double eps_;
    int state_;
    double next_;
    RandomStream* stream_;
};

/// Thinning against the dominating rate bound/eps: candidates are accepted with
/// probability |q_ii(x)|/bound and routed by q_ij(x)/|q_ii(x)|.
class ThinningClock final : public SwitchingClock {
public:
    ThinningClock(const StateDependentGenerator& q, double eps, int i0, double t0, RandomStream& stream);
    double next_event() const override { return next_; }
    void fire(const Eigen::Ref<const Vector>& x) override;
    int regime() const override { return state_; }

private:
    const StateDependentGenerator* q_;
    double eps_;
    int state_;
    double next_;
    RandomStream* stream_;
};

/// Replays a fixed skeleton.
class SkeletonClock final : public SwitchingClock {
public:
    explicit SkeletonClock(const JumpSkeleton& skeleton);
    double next_event() const override;
    void fire(const Eigen::Ref<const Vector>& x) override;
    int regime() const override { return skeleton_->states[k_]; }

private:
    const JumpSkeleton* skeleton_;
    std::size_t k_ = 0;
};

std::unique_ptr<SwitchingClock> make_clock(const Switching& s, double eps, int i0, double t0, RandomStream& stream);

JumpSkeleton sample_jump_skeleton(const Generator& q, double eps, int i0, double horizon, RandomStream& stream);

/// Fraction of [0, horizon] spent in each state.
Vector occupation_fractions(const JumpSkeleton& skeleton);

}  // namespace switchavg
