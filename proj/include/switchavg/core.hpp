#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace switchavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr const char* kVersion = "0.3.0";

// Bad input or violated precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf, blow-up, non-convergence.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BlowUpError : public NumericError {
public:
    BlowUpError(const std::string& what, double time) : NumericError(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
    Vector lo;
    Vector hi;

    Index dim() const { return lo.size(); }
    bool contains(const Eigen::Ref<const Vector>& x, double slack = 0.0) const {
        return ((x - lo).array() >= -slack).all() && ((hi - x).array() >= -slack).all();
    }
};

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream purposes. Switching and diffusion randomness never share a stream.
enum class StreamKind : std::uint64_t { switching = 1, diffusion = 2, initial = 3, projection = 4, probe = 5 };

/// Counter-style derivation: the sub-stream seed depends only on (root, index, kind),
/// so path p draws the same numbers whatever the batch size.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index, StreamKind kind) {
    std::uint64_t h = splitmix64(root);
    h = splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
    return splitmix64(h ^ (static_cast<std::uint64_t>(kind) * 0x8cb92ba72f3d8dd7ULL));
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t root, std::uint64_t index, StreamKind kind)
        : engine_(derive_seed(root, index, kind)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }

    template <typename Derived>
    void fill_normal(Eigen::MatrixBase<Derived>& out) {
        for (Index k = 0; k < out.size(); ++k) out(k) = normal();
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Worker count from SWITCHAVG_THREADS, defaulting to hardware concurrency.
unsigned worker_threads();

}  // namespace switchavg
