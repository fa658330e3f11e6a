#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dbarrier {

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Fixed-order pairwise sum; the split points depend only on the length.
inline double pairwise_sum(const double* x, std::size_t n, std::size_t stride = 1) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i * stride];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h, stride) + pairwise_sum(x + h * stride, n - h, stride);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// Weight of a regulator increment spread uniformly over [ts, t] under e^{-q s}.
inline double discount_weight(double q, double ts, double t) {
    if (!(t > ts)) return std::exp(-q * t);
    const double w = q * (t - ts);
    return std::exp(-q * ts) * (-std::expm1(-w)) / w;
}

}  // namespace dbarrier
