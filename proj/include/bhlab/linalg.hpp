#ifndef BHLAB_LINALG_HPP
#define BHLAB_LINALG_HPP

#include <cmath>
#include <vector>

#include "bhlab/common.hpp"

namespace bhlab::linalg {

// Gaussian elimination with partial pivoting on a row-major m x m matrix.
// Scalar is double or Complex. Throws on a numerically singular pivot.
template <typename Scalar>
std::vector<Scalar> solve(std::vector<Scalar> a, std::vector<Scalar> b, int m) {
    if (static_cast<int>(a.size()) != m * m || static_cast<int>(b.size()) != m)
        throw std::invalid_argument("linalg::solve: shape mismatch");
    double scale = 0.0;
    for (const auto& v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) throw std::runtime_error("linalg::solve: zero matrix");
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        double best = std::abs(a[col * m + col]);
        for (int r = col + 1; r < m; ++r) {
            double v = std::abs(a[r * m + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best <= 1e-14 * scale) throw std::runtime_error("linalg::solve: singular matrix");
        if (pivot != col) {
            for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[pivot * m + c]);
            std::swap(b[col], b[pivot]);
        }
        const Scalar inv = Scalar{1.0} / a[col * m + col];
        for (int r = col + 1; r < m; ++r) {
            Scalar factor = a[r * m + col] * inv;
            if (std::abs(factor) == 0.0) continue;
            for (int c = col; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<Scalar> x(m);
    for (int r = m - 1; r >= 0; --r) {
        Scalar acc = b[r];
        for (int c = r + 1; c < m; ++c) acc -= a[r * m + c] * x[c];
        x[r] = acc / a[r * m + r];
    }
    return x;
}

template <typename Scalar>
std::vector<Scalar> invert(const std::vector<Scalar>& a, int m) {
    std::vector<Scalar> inv(m * m);
    for (int col = 0; col < m; ++col) {
        std::vector<Scalar> e(m, Scalar{0.0});
        e[col] = Scalar{1.0};
        auto x = solve(a, std::move(e), m);
        for (int r = 0; r < m; ++r) inv[r * m + col] = x[r];
    }
    return inv;
}

template <typename Scalar>
double residual_inf(const std::vector<Scalar>& a, const std::vector<Scalar>& x,
                    const std::vector<Scalar>& b, int m) {
    double worst = 0.0;
    for (int r = 0; r < m; ++r) {
        Scalar acc = Scalar{0.0};
        for (int c = 0; c < m; ++c) acc += a[r * m + c] * x[c];
        worst = std::max(worst, std::abs(acc - b[r]));
    }
    return worst;
}

// Operator norm from sup-norm to sup-norm: max absolute row sum.
template <typename Scalar>
double inf_to_inf_norm(const std::vector<Scalar>& a, int m) {
    double worst = 0.0;
    for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c = 0; c < m; ++c) acc += std::abs(a[r * m + c]);
        worst = std::max(worst, acc);
    }
    return worst;
}

template <typename Scalar>
double det_magnitude(std::vector<Scalar> a, int m) {
    double logdet = 0.0;
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        double best = std::abs(a[col * m + col]);
        for (int r = col + 1; r < m; ++r) {
            double v = std::abs(a[r * m + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) return 0.0;
        if (pivot != col)
            for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[pivot * m + c]);
        logdet += std::log(best);
        const Scalar inv = Scalar{1.0} / a[col * m + col];
        for (int r = col + 1; r < m; ++r) {
            Scalar factor = a[r * m + col] * inv;
            for (int c = col; c < m; ++c) a[r * m + c] -= factor * a[col * m + c];
        }
    }
    return std::exp(logdet);
}

}  // namespace bhlab::linalg

#endif  // BHLAB_LINALG_HPP
