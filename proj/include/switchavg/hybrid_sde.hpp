#pragma once

#include "switchavg/core.hpp"
#include "switchavg/ctmc.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace switchavg {

enum class Scheme { euler_maruyama, log_euler };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

/// dX = f(X, a) dt + sqrt(delta) sigma(X, a) dW with a = alpha^eps switching at rate Q/eps.
struct HybridModel {
    using Drift = std::function<void(const Eigen::Ref<const Vector>& x, int regime, Eigen::Ref<Vector> out)>;
    using Diffusion = std::function<void(const Eigen::Ref<const Vector>& x, int regime, Eigen::Ref<Matrix> out)>;

    std::string name;
    int dim = 0;
    int noise_dim = 0;
    Drift drift;
    Diffusion diffusion;
    Switching switching = Generator(Matrix::Zero(1, 1));
    // linear_noise[k]: row k of sigma(x, i) equals x_k times a constant row.
    std::vector<bool> linear_noise;
    bool positive_domain = false;

    int regimes() const { return switching_size(switching); }
    bool all_linear_noise() const;

    Vector drift_at(const Eigen::Ref<const Vector>& x, int regime) const;
    Matrix diffusion_at(const Eigen::Ref<const Vector>& x, int regime) const;

    /// Structural checks plus the linear-noise scaling probe at `probe_a`, `probe_b`.
    void validate(const Eigen::Ref<const Vector>& probe_a, const Eigen::Ref<const Vector>& probe_b) const;
};

struct SimParams {
    double eps = 1e-3;
    double delta = 1e-3;
    double step = 1e-4;
    double horizon = 200.0;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double burn_in = 0.0;
    double guard_radius = 1e6;
    // Record every record_stride-th grid point (the final time is always recorded).
    int record_stride = 1;
    bool record_switches = true;

    void validate() const;
    std::size_t grid_steps() const;
    double grid_time(std::size_t k) const;
};

/// Recorded path: grid points (every record_stride-th multiple of h, and T) plus switching times.
struct Trajectory {
    int dim = 0;
    std::vector<double> times;
    std::vector<double> data;  // column-major, dim values per record
    std::vector<int> regimes;
    std::vector<unsigned char> on_grid;
    SimParams params;

    std::size_t size() const { return times.size(); }
    Eigen::Map<const Vector> state(std::size_t k) const {
        return Eigen::Map<const Vector>(data.data() + k * static_cast<std::size_t>(dim), dim);
    }
    Eigen::Map<const Matrix> states() const {
        return Eigen::Map<const Matrix>(data.data(), dim, static_cast<Index>(times.size()));
    }
    void push(double t, const Eigen::Ref<const Vector>& x, int regime, bool grid);
};

/// Called at t = 0, at recorded grid times and at regime changes. Return false to stop.
using PathObserver = std::function<bool(double t, const Eigen::Ref<const Vector>& x, int regime, bool on_grid)>;

/// Supplies the Brownian increment W(t + dt) - W(t) for one substep.
using BrownianDriver = std::function<void(double t, double dt, Eigen::Ref<Vector> dw)>;

BrownianDriver gaussian_driver(RandomStream& stream);

/// Core integrator: substeps end at min(next grid time, next switching event).
void integrate_path(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0,
                    SwitchingClock& clock, const BrownianDriver& noise, const PathObserver& observe);

/// Path `path_index` of the batch rooted at p.seed; switching and diffusion use separate sub-streams.
void simulate_path_observed(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                            std::uint64_t path_index, const PathObserver& observe);

Trajectory simulate_path(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                         std::uint64_t path_index = 0);

/// Same integrator on a fixed skeleton and noise source.
Trajectory simulate_with_skeleton(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0,
                                  const JumpSkeleton& skeleton, const BrownianDriver& noise);

/// Pure-switching ODE dxi = f(xi, alpha) dt (forward Euler, substeps cut at switches).
Trajectory integrate_switching_ode(const HybridModel& model, const JumpSkeleton& skeleton,
                                   const Eigen::Ref<const Vector>& x0, double step);

class PathError : public NumericError {
public:
    PathError(std::size_t path, const std::string& what)
        : NumericError("path " + std::to_string(path) + ": " + what), path_(path) {}
    std::size_t path() const { return path_; }

private:
    std::size_t path_;
};

struct BatchOptions {
    bool retain_trajectories = false;
    bool retain_path_sq_norms = false;
};

struct BatchSummary {
    SimParams params;
    Vector x0;
    int i0 = 0;
    std::size_t n_paths = 0;
    std::vector<double> times;
    Matrix mean;            // dim x n_times
    Matrix second_moment;   // dim x n_times, E[X_k^2]
    Matrix path_sq_norms;   // n_paths x n_times when retained
    std::vector<Trajectory> trajectories;

    Vector mean_sq_norm() const { return second_moment.colwise().sum().transpose(); }
};

BatchSummary simulate_batch(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                            std::size_t n_paths, const BatchOptions& options = {});

struct MomentCourse {
    std::vector<double> times;
    Vector pointwise;        // mean |Z(t)|^2
    Vector running_average;  // (1/t) int_0^t mean |Z(s)|^2 ds
};

/// Trapezoidal running average of a sampled series; value at t = 0 is the series itself.
Vector running_time_average(const std::vector<double>& times, const Eigen::Ref<const Vector>& values);

MomentCourse empirical_second_moment_course(const BatchSummary& batch);

}  // namespace switchavg
