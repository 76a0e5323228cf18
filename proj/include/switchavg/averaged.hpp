#pragma once

#include "switchavg/core.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/measures.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace switchavg {

/// Autonomous vector field x' = F(x); for averaged models F = sum_i nu_i f(., i).
class AveragedField {
public:
    using Function = std::function<void(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out)>;

    AveragedField() = default;
    AveragedField(int dim, Function f, Vector weights = Vector());

    int dim() const { return dim_; }
    /// Stationary weights used for the average (empty if they vary with x).
    const Vector& weights() const { return weights_; }

    void eval(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const { f_(x, out); }
    Vector operator()(const Eigen::Ref<const Vector>& x) const {
        Vector out(dim_);
        f_(x, out);
        return out;
    }

    AveragedField scaled(double factor) const;

private:
    int dim_ = 0;
    Function f_;
    Vector weights_;
};

AveragedField average_field(const HybridModel& model, const Vector& nu);
/// Uses the chain's stationary law; recomputed per probe for state-dependent chains.
AveragedField average_field(const HybridModel& model);

struct OdePath {
    std::vector<double> times;
    Matrix states;  // dim x n
};

/// One classical RK4 step.
void rk4_step(const AveragedField& field, Eigen::Ref<Vector> x, double h);

/// Fixed-step RK4 to T; the last step is shortened to land on T.
OdePath integrate_ode(const AveragedField& field, const Eigen::Ref<const Vector>& x0, double horizon, double step,
                      double guard_radius = 1e6);

/// Endpoint of the RK4 flow without recording.
Vector flow(const AveragedField& field, const Eigen::Ref<const Vector>& x0, double horizon, double step,
            double guard_radius = 1e6);

/// Central differences with step 1e-6 (1 + |x|).
Matrix jacobian(const AveragedField& field, const Eigen::Ref<const Vector>& x);

enum class EquilibriumKind { source, sink, saddle, nonhyperbolic };

std::string to_string(EquilibriumKind kind);

struct Equilibrium {
    Vector location;
    Matrix jacobian;
    Eigen::VectorXcd eigenvalues;
    EquilibriumKind kind = EquilibriumKind::nonhyperbolic;
    double residual = 0.0;
    std::optional<Vector> stable_normal;  // d = 2 saddles
};

inline constexpr double kHyperbolicityThreshold = 1e-8;

Equilibrium classify_equilibrium(const AveragedField& field, const Eigen::Ref<const Vector>& x);

/// Newton from every node of an n^d grid over the box; roots deduplicated at 1e-6.
/// Seeds whose iteration diverges are skipped.
std::vector<Equilibrium> find_equilibria(const AveragedField& field, const Box& box, int n_per_axis,
                                         double tol = 1e-12);

/// Eigenvector of the negative eigenvalue of a planar saddle.
Vector stable_direction(const Equilibrium& eq);
/// Unit normal of the stable eigenline of a planar saddle.
Vector stable_manifold_normal(const Equilibrium& eq);

struct PoincareSection {
    Vector anchor;
    Vector normal;
    double value(const Eigen::Ref<const Vector>& x) const { return normal.dot(x - anchor); }
};

struct CycleOptions {
    double burn_in = 2000.0;
    double step = 1e-2;
    int max_crossings = 200;
    double closure_tol = 1e-8;
    int samples = 1024;
    double max_gap_time = 1000.0;  // time allowed without any crossing
    double guard_radius = 1e6;
    std::optional<PoincareSection> section;
};

struct LimitCycle {
    double period = 0.0;
    Matrix orbit;  // dim x K, uniform time spacing period / K, orbit.col(0) on the section
    PoincareSection section;
    int crossings = 0;
    double closure_gap = 0.0;
    AveragedField field;
    double step = 1e-2;

    Vector start() const { return orbit.col(0); }
    /// Time average of g over one period from the stored samples.
    double time_average(const std::function<double(const Eigen::Ref<const Vector>&)>& g) const;
};

LimitCycle detect_limit_cycle(const AveragedField& field, const Eigen::Ref<const Vector>& seed,
                              const CycleOptions& options = {}, const std::vector<Equilibrium>& equilibria = {});

/// K equal-weight atoms at uniform-time samples of one period.
Measure cycle_occupation_measure(const LimitCycle& cycle, int atoms);

/// Uniform-time samples of one period starting from cycle.start().
Matrix sample_cycle(const LimitCycle& cycle, int atoms);

}  // namespace switchavg
