#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbarrier {

/// Raised when a model or parameter block violates its invariants.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Law of the absolute size of a one-signed jump.
 *
 * Either a finite mixture of exponentials (a single exponential is a
 * one-component mixture) or a point mass. An empty law carries no mass and
 * is only legal on a side whose arrival rate is zero.
 */
struct JumpLaw {
    enum class Kind { none, mixture, point_mass };

    Kind kind = Kind::none;
    std::vector<double> weights;
    std::vector<double> rates;
    double atom = 0.0;

    static JumpLaw exponential(double eta) { return mixture({1.0}, {eta}); }

    static JumpLaw mixture(std::vector<double> w, std::vector<double> eta) {
        JumpLaw law;
        law.kind = Kind::mixture;
        law.weights = std::move(w);
        law.rates = std::move(eta);
        law.check();
        return law;
    }

    static JumpLaw point_mass(double size) {
        JumpLaw law;
        law.kind = Kind::point_mass;
        law.atom = size;
        law.check();
        return law;
    }

    bool empty() const { return kind == Kind::none; }

    void check() const {
        switch (kind) {
        case Kind::none:
            return;
        case Kind::point_mass:
            if (!(atom > 0.0) || !std::isfinite(atom))
                throw ModelError("point mass size must be finite and > 0");
            return;
        case Kind::mixture: {
            if (weights.empty() || weights.size() != rates.size())
                throw ModelError("mixture needs matching nonempty weights and rates");
            double s = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                if (!(weights[i] >= 0.0)) throw ModelError("mixture weights must be >= 0");
                if (!(rates[i] > 0.0) || !std::isfinite(rates[i]))
                    throw ModelError("exponential rates must be finite and > 0");
                s += weights[i];
            }
            if (std::abs(s - 1.0) > 1e-12) throw ModelError("mixture weights must sum to 1");
            return;
        }
        }
    }

    double mean() const {
        if (kind == Kind::point_mass) return atom;
        double m = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) m += weights[i] / rates[i];
        return m;
    }

    /// E[Y; Y < 1], the open-interval convention: an atom at 1 is excluded.
    double partial_mean_below_one() const {
        if (kind == Kind::point_mass) return atom < 1.0 ? atom : 0.0;
        double m = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double e = rates[i];
            m += weights[i] * (1.0 - std::exp(-e) * (1.0 + e)) / e;
        }
        return m;
    }

    /// E[e^{-sY}] for Re s > -min rate; s may be complex.
    template <class T>
    T laplace(T s) const {
        if (kind == Kind::point_mass) return std::exp(-s * atom);
        T acc = T(0.0);
        for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * rates[i] / (rates[i] + s);
        return acc;
    }

    /// Derivative in s of E[e^{-sY}].
    double laplace_derivative(double s) const {
        if (kind == Kind::point_mass) return -atom * std::exp(-s * atom);
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double d = rates[i] + s;
            acc -= weights[i] * rates[i] / (d * d);
        }
        return acc;
    }

    std::complex<double> characteristic(double lambda) const {
        return laplace(std::complex<double>(0.0, -lambda));
    }

    double density(double y) const {
        if (kind != Kind::mixture || y < 0.0) return 0.0;
        double f = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) f += weights[i] * rates[i] * std::exp(-rates[i] * y);
        return f;
    }

    /// P(Y > y).
    double tail(double y) const {
        if (y < 0.0) return 1.0;
        if (kind == Kind::point_mass) return atom > y ? 1.0 : 0.0;
        double t = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) t += weights[i] * std::exp(-rates[i] * y);
        return t;
    }

    double min_rate() const {
        if (kind != Kind::mixture) return std::numeric_limits<double>::infinity();
        return *std::min_element(rates.begin(), rates.end());
    }

    /// Inverse-transform draw from two independent uniforms in (0, 1).
    double sample(double u_component, double u_size) const {
        if (kind == Kind::point_mass) return atom;
        std::size_t i = 0;
        double c = weights[0];
        while (u_component > c && i + 1 < weights.size()) c += weights[++i];
        return -std::log(u_size) / rates[i];
    }
};

/// Compound Poisson jump part: arrivals at `arrival_rate`, positive with probability `sign_split`.
struct JumpSpec {
    double arrival_rate = 0.0;
    double sign_split = 0.5;
    JumpLaw positive;
    JumpLaw negative;

    double positive_rate() const { return arrival_rate * sign_split; }
    double negative_rate() const { return arrival_rate * (1.0 - sign_split); }
    bool has_positive() const { return positive_rate() > 0.0; }
    bool has_negative() const { return negative_rate() > 0.0; }

    void check() const {
        if (!(arrival_rate >= 0.0) || !std::isfinite(arrival_rate)) throw ModelError("arrival_rate must be finite and >= 0");
        if (!(sign_split >= 0.0 && sign_split <= 1.0)) throw ModelError("sign_split must lie in [0, 1]");
        positive.check();
        negative.check();
        if (has_positive() && positive.empty()) throw ModelError("positive jumps have mass but no size law");
        if (has_negative() && negative.empty()) throw ModelError("negative jumps have mass but no size law");
    }
};

/**
 * Finite-activity Lévy triplet (gamma, sigma, Pi).
 *
 * `gamma` is the drift of the characteristic exponent, so the small-jump
 * compensator over |x| < 1 is part of the triplet. Simulation uses the
 * linear drift gamma - \int_{|x|<1} x Pi(dx) with uncompensated jumps.
 */
struct LevyModel {
    double gamma = 0.0;
    double sigma = 0.0;
    JumpSpec jumps;

    LevyModel() = default;
    LevyModel(double gamma_, double sigma_, JumpSpec jumps_ = {})
        : gamma(gamma_), sigma(sigma_), jumps(std::move(jumps_)) {
        check();
    }

    /// Model whose uncompensated drift equals `d`.
    static LevyModel from_linear_drift(double d, double sigma_, JumpSpec jumps_ = {}) {
        LevyModel m(0.0, sigma_, std::move(jumps_));
        m.gamma = d + m.small_jump_mean();
        return m;
    }

    void check() const {
        if (!std::isfinite(gamma)) throw ModelError("gamma must be finite");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ModelError("sigma must be finite and >= 0");
        jumps.check();
    }

    /// \int_{|x|<1} x Pi(dx).
    double small_jump_mean() const {
        double m = 0.0;
        if (jumps.has_positive()) m += jumps.positive_rate() * jumps.positive.partial_mean_below_one();
        if (jumps.has_negative()) m -= jumps.negative_rate() * jumps.negative.partial_mean_below_one();
        return m;
    }

    double linear_drift() const { return gamma - small_jump_mean(); }

    bool spectrally_negative() const { return !jumps.has_positive(); }
    bool spectrally_positive() const { return !jumps.has_negative(); }

    /// Same linear drift and Gaussian part, positive jumps removed.
    LevyModel negative_part() const {
        JumpSpec j;
        j.arrival_rate = jumps.negative_rate();
        j.sign_split = 0.0;
        j.negative = jumps.has_negative() ? jumps.negative : JumpLaw{};
        return from_linear_drift(linear_drift(), sigma, j);
    }

    /// Law of -X.
    LevyModel mirror() const {
        JumpSpec j;
        j.arrival_rate = jumps.arrival_rate;
        j.sign_split = 1.0 - jumps.sign_split;
        j.positive = jumps.negative;
        j.negative = jumps.positive;
        return from_linear_drift(-linear_drift(), sigma, j);
    }
};

/// Discount rate and unit cost of injected capital.
struct ProblemParams {
    double q = 0.1;
    double beta = 1.5;

    void check() const {
        if (!(q > 0.0) || !std::isfinite(q)) throw ModelError("q must be finite and > 0");
        if (!(beta > 1.0) || !std::isfinite(beta)) throw ModelError("beta must be finite and > 1");
    }
};

struct Variation {
    bool bounded = false;
    double delta = 0.0;  // meaningful only when bounded
};

inline Variation classify_variation(const LevyModel& m) {
    m.check();
    if (m.sigma > 0.0) return {false, 0.0};
    return {true, m.linear_drift()};
}

inline bool is_monotone(const LevyModel& m) {
    if (m.sigma > 0.0) return false;
    const double d = m.linear_drift();
    const bool up = !m.jumps.has_negative() && d >= 0.0;
    const bool down = !m.jumps.has_positive() && d <= 0.0;
    return up || down;
}

/// Full validation: basic invariants plus the non-monotone requirement.
inline void validate(const LevyModel& m) {
    m.check();
    if (is_monotone(m)) throw ModelError("model has monotone paths");
}

inline std::complex<double> char_exponent(const LevyModel& m, double lambda) {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    C psi = -i * lambda * m.linear_drift() + 0.5 * m.sigma * m.sigma * lambda * lambda;
    if (m.jumps.has_positive()) psi += m.jumps.positive_rate() * (1.0 - m.jumps.positive.characteristic(lambda));
    if (m.jumps.has_negative()) psi += m.jumps.negative_rate() * (1.0 - m.jumps.negative.characteristic(-lambda));
    return psi;
}

/// psi(s) = log E e^{s X_1} for a spectrally negative model; s real or complex.
template <class T>
T laplace_exponent_sn(const LevyModel& m, T s) {
    if (!m.spectrally_negative()) throw ModelError("Laplace exponent requires no positive jumps");
    T psi = m.linear_drift() * s + 0.5 * m.sigma * m.sigma * s * s;
    if (m.jumps.has_negative()) psi += m.jumps.negative_rate() * (m.jumps.negative.laplace(s) - 1.0);
    return psi;
}

inline double laplace_exponent_sn(const LevyModel& m, double s) { return laplace_exponent_sn<double>(m, s); }

inline double laplace_exponent_sn_derivative(const LevyModel& m, double s) {
    if (!m.spectrally_negative()) throw ModelError("Laplace exponent requires no positive jumps");
    double d = m.linear_drift() + m.sigma * m.sigma * s;
    if (m.jumps.has_negative()) d += m.jumps.negative_rate() * m.jumps.negative.laplace_derivative(s);
    return d;
}

inline double mean_rate(const LevyModel& m) {
    double mu = m.linear_drift();
    if (m.jumps.has_positive()) mu += m.jumps.positive_rate() * m.jumps.positive.mean();
    if (m.jumps.has_negative()) mu -= m.jumps.negative_rate() * m.jumps.negative.mean();
    return mu;
}

/// E|J^-| weighted by the negative arrival rate.
inline double negative_jump_intensity_mean(const LevyModel& m) {
    return m.jumps.has_negative() ? m.jumps.negative_rate() * m.jumps.negative.mean() : 0.0;
}

inline double positive_jump_intensity_mean(const LevyModel& m) {
    return m.jumps.has_positive() ? m.jumps.positive_rate() * m.jumps.positive.mean() : 0.0;
}

}  // namespace dbarrier
