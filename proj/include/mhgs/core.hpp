#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mhgs {

using Scalar = double;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Dense per-pixel scalar field, indexed (row, col) = (y, x).
using PixelMap = Eigen::ArrayXXd;

/// A documented precondition or interface contract was violated by the caller.
class contract_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation produced non-finite or otherwise unusable numbers.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File format / filesystem problems.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename T>
inline T logistic(T z) {
    if (z >= T(0)) {
        const T e = std::exp(-z);
        return T(1) / (T(1) + e);
    }
    const T e = std::exp(z);
    return e / (T(1) + e);
}

template <typename T>
inline T logit(T p) {
    return std::log(p) - std::log1p(-p);
}

inline Scalar clamp01(Scalar v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

/// Deterministic xoshiro256++ stream. All stochastic choices in the library go
/// through this type so that runs are reproducible and resumable: the full
/// state is four words, serialized verbatim into checkpoints.
class Rng {
public:
    Rng() : Rng(0x9e3779b97f4a7c15ull) {}

    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the xoshiro state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    Scalar uniform() { return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe under log().
    Scalar uniform_pos() { return static_cast<Scalar>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased-enough bounded integer in [0, n) via 128-bit multiply.
    std::uint64_t index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; stateless (second variate discarded).
    Scalar normal() {
        const Scalar u1 = uniform_pos();
        const Scalar u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vec3 normal3() { return Vec3(normal(), normal(), normal()); }

    /// Independent stream derived from this one's seed path.
    Rng fork(std::uint64_t tag) {
        return Rng(next_u64() ^ (tag * 0xd1342543de82ef95ull));
    }

    const std::array<std::uint64_t, 4>& state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace mhgs
