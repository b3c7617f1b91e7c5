#pragma once

#include <cmath>
#include <string_view>

#include "duffing/linalg.hpp"

namespace duffing {

enum class ForcingKind { Zero, Constant, Decaying, Sinusoidal };

inline std::string_view to_string(ForcingKind kind) {
    switch (kind) {
    case ForcingKind::Zero: return "zero";
    case ForcingKind::Constant: return "constant";
    case ForcingKind::Decaying: return "decaying";
    case ForcingKind::Sinusoidal: return "sinusoidal";
    }
    return "zero";
}

/// f(t) = amplitude * s(t) * g with |g| = 1 and
///   constant:   s = 1
///   decaying:   s = exp(-rate t)
///   sinusoidal: s = sin(frequency t)
class Forcing {
public:
    static Forcing zero(Eigen::Index n) { return Forcing(ForcingKind::Zero, 0.0, Vec::Zero(n), 0.0, 0.0); }
    static Forcing constant(double amplitude, const Vec& shape) {
        return Forcing(ForcingKind::Constant, amplitude, shape, 0.0, 0.0);
    }
    static Forcing decaying(double amplitude, const Vec& shape, double rate) {
        if (!(rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "decay rate must be positive");
        return Forcing(ForcingKind::Decaying, amplitude, shape, rate, 0.0);
    }
    static Forcing sinusoidal(double amplitude, const Vec& shape, double frequency) {
        return Forcing(ForcingKind::Sinusoidal, amplitude, shape, 0.0, frequency);
    }

    ForcingKind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }
    const Vec& shape() const { return shape_; }
    double rate() const { return rate_; }
    double frequency() const { return frequency_; }
    Eigen::Index dimension() const { return shape_.size(); }

    /// Signed scalar profile; |f(t)| = |profile(t)|.
    double profile(double t) const {
        switch (kind_) {
        case ForcingKind::Zero: return 0.0;
        case ForcingKind::Constant: return amplitude_;
        case ForcingKind::Decaying: return amplitude_ * std::exp(-rate_ * t);
        case ForcingKind::Sinusoidal: return amplitude_ * std::sin(frequency_ * t);
        }
        return 0.0;
    }
    Vec value(double t) const { return profile(t) * shape_; }
    double norm(double t) const { return kind_ == ForcingKind::Zero ? 0.0 : std::abs(profile(t)); }
    /// sup_t |f(t)|.
    double sup_norm() const { return kind_ == ForcingKind::Zero ? 0.0 : std::abs(amplitude_); }

    Forcing negated() const {
        Forcing copy = *this;
        copy.shape_ = -shape_;
        return copy;
    }

private:
    Forcing(ForcingKind kind, double amplitude, Vec shape, double rate, double frequency)
        : kind_(kind), amplitude_(amplitude), shape_(std::move(shape)), rate_(rate), frequency_(frequency) {
        if (kind_ != ForcingKind::Zero) {
            const double norm = shape_.norm();
            if (!(norm > 0.0) || !std::isfinite(norm))
                throw Error(ErrorKind::InvalidArgument, "forcing shape must be a nonzero finite vector");
            shape_ /= norm;
        }
    }

    ForcingKind kind_;
    double amplitude_;
    Vec shape_;
    double rate_;
    double frequency_;
};

} // namespace duffing
