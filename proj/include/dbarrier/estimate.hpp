#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "dbarrier/numerics.hpp"

namespace dbarrier {

/// Raised when an estimate cannot be produced or violates a structural bound.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MCEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    std::uint64_t n_paths = 0;
    double truncation_bound = 0.0;
};

/// Per-path samples, one column per functional; column-major.
class SampleMatrix {
public:
    SampleMatrix() = default;
    SampleMatrix(std::size_t n_paths, std::size_t n_cols) : n_(n_paths), k_(n_cols), data_(n_paths * n_cols, 0.0) {}

    std::size_t paths() const { return n_; }
    std::size_t cols() const { return k_; }

    double& at(std::size_t path, std::size_t col) { return data_[col * n_ + path]; }
    double at(std::size_t path, std::size_t col) const { return data_[col * n_ + path]; }
    const double* column(std::size_t col) const { return data_.data() + col * n_; }

    /// Mean and standard error of sum_j w_j * column(c_j), paired per path.
    MCEstimate combination(const std::vector<std::size_t>& cols, const std::vector<double>& w, double offset = 0.0) const {
        if (n_ == 0) throw EstimationError("no samples");
        std::vector<double> z(n_, offset);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double* c = column(cols[j]);
            for (std::size_t i = 0; i < n_; ++i) z[i] += w[j] * c[i];
        }
        return summarize(z);
    }

    MCEstimate estimate(std::size_t col, double offset = 0.0) const { return combination({col}, {1.0}, offset); }

    /// Sample covariance of the means of two columns.
    double mean_covariance(std::size_t a, std::size_t b) const {
        if (n_ < 2) return 0.0;
        const double ma = pairwise_sum(column(a), n_) / double(n_);
        const double mb = pairwise_sum(column(b), n_) / double(n_);
        std::vector<double> z(n_);
        const double* ca = column(a);
        const double* cb = column(b);
        for (std::size_t i = 0; i < n_; ++i) z[i] = (ca[i] - ma) * (cb[i] - mb);
        return pairwise_sum(z) / double(n_ - 1) / double(n_);
    }

    static MCEstimate summarize(std::vector<double>& z) {
        MCEstimate e;
        const std::size_t n = z.size();
        e.n_paths = n;
        e.mean = pairwise_sum(z) / double(n);
        if (n > 1) {
            for (auto& v : z) v = (v - e.mean) * (v - e.mean);
            e.stderr = std::sqrt(pairwise_sum(z) / double(n - 1) / double(n));
        }
        return e;
    }

private:
    std::size_t n_ = 0, k_ = 0;
    std::vector<double> data_;
};

/// Independent seed for a tagged sub-experiment (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/**
 * Runs f(path_index, row) for every path and returns the sample matrix.
 * Each worker owns a contiguous index block; the result does not depend on
 * the worker count because rows are written in place and reduced later.
 */
template <class F>
SampleMatrix run_batch(std::size_t n_paths, std::size_t n_cols, unsigned workers, F&& f) {
    SampleMatrix out(n_paths, n_cols);
    const unsigned w = std::max(1u, std::min<unsigned>(resolve_workers(workers), unsigned(std::max<std::size_t>(n_paths, 1))));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        try {
            std::vector<double> row(n_cols);
            for (std::size_t i = begin; i < end; ++i) {
                std::fill(row.begin(), row.end(), 0.0);
                f(std::uint64_t(i), row.data());
                for (std::size_t c = 0; c < n_cols; ++c) out.at(i, c) = row[c];
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (w == 1) {
        work(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + w - 1) / w;
        for (unsigned t = 0; t < w; ++t) {
            const std::size_t b = std::min(n_paths, std::size_t(t) * chunk);
            const std::size_t e = std::min(n_paths, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace dbarrier
