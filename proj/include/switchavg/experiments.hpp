#pragma once

#include "switchavg/averaged.hpp"
#include "switchavg/core.hpp"
#include "switchavg/hybrid_sde.hpp"
#include "switchavg/io.hpp"
#include "switchavg/measures.hpp"
#include "switchavg/stats.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace switchavg {

/// Asymptotic regime of delta/eps along a sequence of noise pairs.
enum class RegimeCase { case1, case2, case3 };

std::string to_string(RegimeCase c);
RegimeCase regime_case_from_string(std::string_view name);

struct NoisePair {
    double eps = 1e-3;
    double delta = 1e-3;
    double ratio() const { return delta / eps; }
};

/// case1: delta/eps -> l in (0, inf), case2: -> 0, case3: -> inf.
struct RegimeSpec {
    std::vector<NoisePair> pairs;
    std::optional<RegimeCase> tag;

    /// Ratios must trend toward the tagged limit: case1 keeps every ratio within a factor 10
    /// of the first, case2 is nonincreasing and ends below 1, case3 is nondecreasing and ends above 1.
    void validate() const;
};

Json to_json(const NoisePair& p);
Json to_json(const RegimeSpec& r);

struct ClosenessSpec {
    double gamma = 0.5;
    double horizon = 10.0;
    std::size_t n_paths = 2000;
    double step = 1e-3;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double guard_radius = 1e6;

    void validate() const;
};

struct ClosenessCell {
    NoisePair pair;
    ProportionEstimate estimate;  // paths with sup_t |X - Xbar| >= gamma among finite paths
    std::size_t non_finite = 0;
    double rate = 0.0;            // -(eps + delta) ln max(p, 1/N)
};

struct ClosenessReport {
    ClosenessSpec spec;
    Vector x0;
    int i0 = 0;
    RegimeSpec regimes;
    std::vector<ClosenessCell> cells;
    bool nonincreasing = false;
    bool extremes_separated = false;
    double wall_seconds = 0.0;

    Json to_json() const;
    std::string to_text() const;
};

/// Fraction of N coupled paths whose sup-deviation from the averaged RK4 path on the
/// shared grid reaches gamma, one cell per noise pair.
ClosenessReport closeness_probability(const HybridModel& model, const Eigen::Ref<const Vector>& x0, int i0,
                                      const ClosenessSpec& spec, const RegimeSpec& regimes);

struct ExitSpec {
    Vector equilibrium;
    double theta1 = 0.05;
    double theta3 = 0.1;
    double horizon = 20.0;     // H
    std::size_t n_paths = 10000;
    double radius = 1.0;       // R
    double Delta = 1.0;
    double step = 1e-3;
    int i0 = 0;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    double guard_radius = 1e6;
    int continuation_steps = 20;
    bool enforce_assumption = true;

    void validate() const;
};

/// Polyline approximating the stable set near an equilibrium.
struct StableSetProxy {
    Matrix points;  // dim x n, consecutive columns joined by segments; a single column for sources
    double distance(const Eigen::Ref<const Vector>& x) const;
    /// distance(x) < r, scanning outward from the middle segment.
    bool near(const Eigen::Ref<const Vector>& x, double r) const;

private:
    double segment_distance_sq(const Eigen::Ref<const Vector>& x, Index k) const;
};

/// Stable eigenline segment of the given half length through a planar saddle, continued at
/// both ends by `steps` backward RK4 steps of equal arc length reaching out to `reach`;
/// the equilibrium itself for a source.
StableSetProxy stable_set_proxy(const AveragedField& field, const Equilibrium& eq, double half_length, int steps,
                                double reach);

struct ExitCell {
    NoisePair pair;
    ProportionEstimate estimate;  // P{tau <= H}
    double target = 0.0;          // exp(-Delta / (eps + delta))
    double target_eps = 0.0;      // exp(-Delta / eps)
    bool bound_holds = false;     // Wilson lower bound above target
    std::size_t non_finite = 0;
    std::vector<double> exit_times;  // +inf when no exit by H

    /// Empirical P{tau <= h} over the finite paths for h <= H.
    double probability_by(double h) const;
};

struct ExitReport {
    ExitSpec spec;
    Equilibrium equilibrium;
    RegimeSpec regimes;
    std::vector<ExitCell> cells;
    std::string witness_note;
    bool witness_ok = false;
    double wall_seconds = 0.0;

    Json to_json() const;
    std::string to_text() const;
};

ExitReport exit_time_experiment(const HybridModel& model, const ExitSpec& spec, const RegimeSpec& regimes);

struct SweepSpec {
    double horizon = 200.0;
    double burn_fraction = 0.25;
    std::size_t n_seeds = 20;
    double step = 1e-4;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::euler_maruyama;
    int n_proj = 256;
    int atoms = 1024;
    double sample_spacing = 1e-2;  // time between retained atoms of the empirical measure
    int energy_atoms = 2048;
    double guard_radius = 1e6;

    void validate() const;
};

struct FunctionalCheck {
    std::string name;
    double cycle_value = 0.0;
    SampleSummary empirical;
    bool within_3sd = false;
};

struct SweepCell {
    NoisePair pair;
    std::vector<double> distances;
    SampleSummary sliced;
    SampleSummary energy;
    std::vector<FunctionalCheck> functionals;
};

struct SweepReport {
    SweepSpec spec;
    Vector x0;
    int i0 = 0;
    RegimeSpec regimes;
    double period = 0.0;
    std::vector<SweepCell> cells;
    bool strictly_decreasing = false;
    bool extremes_separated = false;
    bool energy_same_ranking = false;
    double wall_seconds = 0.0;

    Json to_json() const;
    std::string to_text() const;
};

/// Distance from the empirical occupation measure of each seed's path to mu0.
SweepReport convergence_sweep(const HybridModel& model, const LimitCycle& cycle, const Eigen::Ref<const Vector>& x0,
                              int i0, const SweepSpec& spec, const RegimeSpec& regimes);

struct LipschitzProbe {
    std::size_t pairs = 0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
};

Json to_json(const LipschitzProbe& p);

struct AuditEntry {
    Equilibrium equilibrium;
    std::vector<Vector> drifts;       // f(x*, i)
    std::vector<double> beta_f;       // beta' f(x*, i); |f| for sources
    std::vector<double> beta_sigma;   // |beta' sigma(x*, i)|; |sigma| for sources
    std::optional<int> witness_case1;
    std::optional<int> witness_case2;
    std::optional<int> witness_case3;

    std::optional<int> witness(RegimeCase c) const;
};

struct AuditOptions {
    int grid = 13;
    std::size_t lipschitz_pairs = 2000;
    double lipschitz_radius = 1e-3;
    std::uint64_t seed = 1;
    double witness_tol = 1e-8;
};

struct AuditReport {
    Box box;
    LipschitzProbe drift_lipschitz;
    LipschitzProbe diffusion_lipschitz;
    std::vector<AuditEntry> entries;

    Json to_json() const;
    std::string to_text() const;
};

AuditEntry audit_equilibrium(const HybridModel& model, const Equilibrium& eq, double tol = 1e-8);

AuditReport assumption_audit(const HybridModel& model, const Box& box, const AuditOptions& options = {});

}  // namespace switchavg
