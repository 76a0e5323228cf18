#include "switchavg/hybrid_sde.hpp"

#include "switchavg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace switchavg {

std::string to_string(Scheme scheme) {
    return scheme == Scheme::log_euler ? "log_euler" : "euler_maruyama";
}

Scheme scheme_from_string(std::string_view name) {
    if (name == "euler_maruyama") return Scheme::euler_maruyama;
    if (name == "log_euler") return Scheme::log_euler;
    throw ValidationError("unknown scheme '" + std::string(name) + "' (expected euler_maruyama or log_euler)");
}

bool HybridModel::all_linear_noise() const {
    return static_cast<int>(linear_noise.size()) == dim &&
           std::all_of(linear_noise.begin(), linear_noise.end(), [](bool b) { return b; });
}

Vector HybridModel::drift_at(const Eigen::Ref<const Vector>& x, int regime) const {
    Vector out(dim);
    drift(x, regime, out);
    return out;
}

Matrix HybridModel::diffusion_at(const Eigen::Ref<const Vector>& x, int regime) const {
    Matrix out(dim, noise_dim);
    diffusion(x, regime, out);
    return out;
}

void HybridModel::validate(const Eigen::Ref<const Vector>& probe_a, const Eigen::Ref<const Vector>& probe_b) const {
    require(dim >= 1, "model: dimension must be positive");
    require(noise_dim >= 0, "model: noise dimension must be nonnegative");
    require(static_cast<bool>(drift), "model: missing drift");
    require(noise_dim == 0 || static_cast<bool>(diffusion), "model: missing diffusion");
    require(linear_noise.empty() || static_cast<int>(linear_noise.size()) == dim,
            "model: linear-noise flags must match the dimension");
    require(probe_a.size() == dim && probe_b.size() == dim, "model: probe dimension mismatch");
    if (const auto* g = std::get_if<Generator>(&switching)) {
        require(g->size() == 1 || check_irreducible(*g), "model: generator must be irreducible");
        for (int i = 0; g->size() > 1 && i < g->size(); ++i) {
            require(g->exit_rate(i) > 0.0, "model: zero-rate state is only allowed for a single-state chain");
        }
    }
    if (noise_dim == 0 || linear_noise.empty()) return;
    for (int i = 0; i < regimes(); ++i) {
        const Matrix sa = diffusion_at(probe_a, i);
        const Matrix sb = diffusion_at(probe_b, i);
        for (int k = 0; k < dim; ++k) {
            if (!linear_noise[static_cast<std::size_t>(k)]) continue;
            require(probe_a(k) != 0.0 && probe_b(k) != 0.0, "model: linear-noise probe needs nonzero coordinates");
            const Eigen::RowVectorXd ca = sa.row(k) / probe_a(k);
            const Eigen::RowVectorXd cb = sb.row(k) / probe_b(k);
            require((ca - cb).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + ca.cwiseAbs().maxCoeff()),
                    "model: diffusion row " + std::to_string(k + 1) + " does not scale with x_" +
                        std::to_string(k + 1) + " in regime " + std::to_string(i + 1));
        }
    }
}

void SimParams::validate() const {
    std::ostringstream err;
    if (!(eps > 0.0)) err << "eps must be positive; ";
    if (!(delta >= 0.0)) err << "delta must be nonnegative; ";
    if (!(step > 0.0)) err << "step must be positive; ";
    if (!(horizon > 0.0)) err << "horizon must be positive; ";
    if (step > horizon) err << "step must not exceed the horizon; ";
    if (!(burn_in >= 0.0 && burn_in <= horizon)) err << "burn-in must lie in [0, horizon]; ";
    if (!(guard_radius > 0.0)) err << "guard radius must be positive; ";
    if (record_stride < 1) err << "record stride must be >= 1; ";
    const std::string msg = err.str();
    if (!msg.empty()) throw ValidationError("sim params: " + msg.substr(0, msg.size() - 2));
}

std::size_t SimParams::grid_steps() const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)));
}

double SimParams::grid_time(std::size_t k) const {
    return k >= grid_steps() ? horizon : static_cast<double>(k) * step;
}

void Trajectory::push(double t, const Eigen::Ref<const Vector>& x, int regime, bool grid) {
    times.push_back(t);
    data.insert(data.end(), x.data(), x.data() + x.size());
    regimes.push_back(regime);
    on_grid.push_back(grid ? 1 : 0);
}

BrownianDriver gaussian_driver(RandomStream& stream) {
    return [&stream](double, double dt, Eigen::Ref<Vector> dw) {
        const double scale = std::sqrt(dt);
        for (Index k = 0; k < dw.size(); ++k) dw(k) = scale * stream.normal();
    };
}

namespace {

class Stepper {
public:
    Stepper(const HybridModel& model, const SimParams& p)
        : model_(model), p_(p), f_(model.dim), sigma_(model.dim, std::max(model.noise_dim, 1)),
          dw_(std::max(model.noise_dim, 1)), sqrt_delta_(std::sqrt(p.delta)) {
        if (p.scheme == Scheme::log_euler) {
            require(model.all_linear_noise(), "log_euler requires linear-noise flags on every coordinate");
        }
    }

    void advance(Vector& x, int regime, double t, double dt, const BrownianDriver& noise) {
        model_.drift(x, regime, f_);
        if (!f_.allFinite()) throw NumericError("non-finite drift at t=" + std::to_string(t));
        const bool noisy = p_.delta > 0.0 && model_.noise_dim > 0;
        if (noisy) {
            model_.diffusion(x, regime, sigma_);
            if (!sigma_.allFinite()) throw NumericError("non-finite diffusion at t=" + std::to_string(t));
            noise(t, dt, dw_);
        }
        if (p_.scheme == Scheme::euler_maruyama) {
            if (noisy) {
                x += dt * f_ + sqrt_delta_ * (sigma_ * dw_);
            } else {
                x += dt * f_;
            }
        } else {
            for (Index k = 0; k < x.size(); ++k) {
                const double xk = x(k);
                double y = std::log(xk) + dt * f_(k) / xk;
                if (noisy) {
                    const auto c = sigma_.row(k) / xk;
                    y += -0.5 * p_.delta * c.squaredNorm() * dt + sqrt_delta_ * c.dot(dw_);
                }
                x(k) = std::exp(y);
            }
        }
        const double t_end = t + dt;
        if (!x.allFinite()) throw NumericError("non-finite state at t=" + std::to_string(t_end));
        if (x.norm() > p_.guard_radius) {
            throw BlowUpError("state left the guard ball of radius " + std::to_string(p_.guard_radius) +
                                  " at t=" + std::to_string(t_end),
                              t_end);
        }
        if (model_.positive_domain && !(x.array() > 0.0).all()) {
            throw NumericError("state left the positive orthant at t=" + std::to_string(t_end));
        }
    }

private:
    const HybridModel& model_;
    const SimParams& p_;
    Vector f_;
    Matrix sigma_;
    Vector dw_;
    double sqrt_delta_;
};

}  // namespace

void integrate_path(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0,
                    SwitchingClock& clock, const BrownianDriver& noise, const PathObserver& observe) {
    p.validate();
    require(x0.size() == model.dim, "initial state has wrong dimension");
    require(x0.allFinite(), "initial state must be finite");
    if (model.positive_domain || p.scheme == Scheme::log_euler) {
        require((x0.array() > 0.0).all(), "initial state must be strictly positive");
    }
    Stepper stepper(model, p);
    Vector x = x0;
    double t = 0.0;
    if (!observe(t, x, clock.regime(), true)) return;
    const std::size_t n = p.grid_steps();
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_grid = p.grid_time(k);
        for (;;) {
            const double t_event = clock.next_event();
            const double t_end = std::min(t_grid, t_event);
            if (t_end > t) stepper.advance(x, clock.regime(), t, t_end - t, noise);
            t = t_end;
            if (t_event > t_grid) break;
            const int before = clock.regime();
            clock.fire(x);
            if (t_event == t_grid) break;
            if (clock.regime() != before && p.record_switches && !observe(t, x, clock.regime(), false)) return;
        }
        t = t_grid;
        if ((k % static_cast<std::size_t>(p.record_stride) == 0 || k == n) && !observe(t, x, clock.regime(), true)) {
            return;
        }
    }
}

void simulate_path_observed(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                            std::uint64_t path_index, const PathObserver& observe) {
    require(i0 >= 0 && i0 < model.regimes(), "initial regime out of range");
    RandomStream switching(p.seed, path_index, StreamKind::switching);
    RandomStream diffusion(p.seed, path_index, StreamKind::diffusion);
    const auto clock = make_clock(model.switching, p.eps, i0, 0.0, switching);
    integrate_path(model, p, x0, *clock, gaussian_driver(diffusion), observe);
}

namespace {

PathObserver recorder(Trajectory& traj) {
    return [&traj](double t, const Eigen::Ref<const Vector>& x, int regime, bool grid) {
        traj.push(t, x, regime, grid);
        return true;
    };
}

}  // namespace

Trajectory simulate_path(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                         std::uint64_t path_index) {
    Trajectory traj;
    traj.dim = model.dim;
    traj.params = p;
    simulate_path_observed(model, p, x0, i0, path_index, recorder(traj));
    return traj;
}

Trajectory simulate_with_skeleton(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0,
                                  const JumpSkeleton& skeleton, const BrownianDriver& noise) {
    require(skeleton.horizon >= p.horizon, "skeleton shorter than the simulation horizon");
    Trajectory traj;
    traj.dim = model.dim;
    traj.params = p;
    SkeletonClock clock(skeleton);
    integrate_path(model, p, x0, clock, noise, recorder(traj));
    return traj;
}

Trajectory integrate_switching_ode(const HybridModel& model, const JumpSkeleton& skeleton,
                                   const Eigen::Ref<const Vector>& x0, double step) {
    require(step > 0.0 && skeleton.horizon > 0.0, "switching ODE: step and horizon must be positive");
    Trajectory traj;
    traj.dim = model.dim;
    traj.params.step = step;
    traj.params.horizon = skeleton.horizon;
    traj.params.delta = 0.0;
    const std::size_t n = traj.params.grid_steps();
    Vector x = x0;
    Vector f(model.dim);
    std::size_t jump = 1;
    int regime = skeleton.states.front();
    double t = 0.0;
    traj.push(t, x, regime, true);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_grid = traj.params.grid_time(k);
        while (jump < skeleton.times.size() && skeleton.times[jump] <= t_grid) {
            const double ts = skeleton.times[jump];
            if (ts > t) {
                model.drift(x, regime, f);
                x += (ts - t) * f;
                t = ts;
            }
            regime = skeleton.states[jump++];
            if (t < t_grid) traj.push(t, x, regime, false);
        }
        if (t_grid > t) {
            model.drift(x, regime, f);
            x += (t_grid - t) * f;
        }
        t = t_grid;
        traj.push(t, x, regime, true);
    }
    return traj;
}

BatchSummary simulate_batch(const HybridModel& model, const SimParams& p, const Eigen::Ref<const Vector>& x0, int i0,
                            std::size_t n_paths, const BatchOptions& options) {
    require(n_paths >= 1, "batch: n_paths must be >= 1");
    p.validate();
    BatchSummary out;
    out.params = p;
    out.x0 = x0;
    out.i0 = i0;
    out.n_paths = n_paths;
    const std::size_t n = p.grid_steps();
    for (std::size_t k = 0; k <= n; ++k) {
        if (k % static_cast<std::size_t>(p.record_stride) == 0 || k == n) out.times.push_back(p.grid_time(k));
    }
    const auto n_times = static_cast<Index>(out.times.size());
    const Index d = model.dim;

    // Fixed-size chunks summed in chunk order keep the reduction independent of thread count.
    constexpr std::size_t kChunk = 64;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Matrix> sums(n_chunks, Matrix::Zero(d, n_times));
    std::vector<Matrix> squares(n_chunks, Matrix::Zero(d, n_times));
    if (options.retain_path_sq_norms) out.path_sq_norms = Matrix::Zero(static_cast<Index>(n_paths), n_times);
    if (options.retain_trajectories) out.trajectories.resize(n_paths);

    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t first = c * kChunk;
        const std::size_t last = std::min(n_paths, first + kChunk);
        for (std::size_t path = first; path < last; ++path) {
            Trajectory traj;
            traj.dim = model.dim;
            traj.params = p;
            Index col = 0;
            try {
                simulate_path_observed(model, p, x0, i0, path,
                                       [&](double t, const Eigen::Ref<const Vector>& x, int regime, bool grid) {
                                           if (options.retain_trajectories) traj.push(t, x, regime, grid);
                                           if (!grid) return true;
                                           sums[c].col(col) += x;
                                           squares[c].col(col) += x.cwiseAbs2();
                                           if (options.retain_path_sq_norms) {
                                               out.path_sq_norms(static_cast<Index>(path), col) = x.squaredNorm();
                                           }
                                           ++col;
                                           return true;
                                       });
            } catch (const std::exception& e) {
                throw PathError(path, e.what());
            }
            if (options.retain_trajectories) out.trajectories[path] = std::move(traj);
        }
    });

    out.mean = Matrix::Zero(d, n_times);
    out.second_moment = Matrix::Zero(d, n_times);
    for (std::size_t c = 0; c < n_chunks; ++c) {
        out.mean += sums[c];
        out.second_moment += squares[c];
    }
    out.mean /= static_cast<double>(n_paths);
    out.second_moment /= static_cast<double>(n_paths);
    return out;
}

Vector running_time_average(const std::vector<double>& times, const Eigen::Ref<const Vector>& values) {
    require(static_cast<Index>(times.size()) == values.size() && !times.empty(), "running average: size mismatch");
    Vector out(values.size());
    out(0) = values(0);
    double integral = 0.0;
    for (Index k = 1; k < values.size(); ++k) {
        const auto uk = static_cast<std::size_t>(k);
        integral += 0.5 * (values(k) + values(k - 1)) * (times[uk] - times[uk - 1]);
        out(k) = times[uk] > 0.0 ? integral / times[uk] : values(k);
    }
    return out;
}

MomentCourse empirical_second_moment_course(const BatchSummary& batch) {
    require(batch.n_paths >= 1 && !batch.times.empty(), "moment course: empty batch");
    MomentCourse course;
    course.times = batch.times;
    course.pointwise = batch.mean_sq_norm();
    course.running_average = running_time_average(course.times, course.pointwise);
    return course;
}

}  // namespace switchavg
