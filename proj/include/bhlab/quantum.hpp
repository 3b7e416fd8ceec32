#ifndef BHLAB_QUANTUM_HPP
#define BHLAB_QUANTUM_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhlab/boolean_cube.hpp"
#include "bhlab/common.hpp"
#include "bhlab/cyclic.hpp"

namespace bhlab::quantum {

struct Matrix {
    int dim = 0;
    std::vector<Complex> a;  // row-major

    Matrix() = default;
    explicit Matrix(int d) : dim(d), a(static_cast<std::size_t>(d) * d, Complex{0, 0}) {}

    Complex& at(int r, int c) { return a[static_cast<std::size_t>(r) * dim + c]; }
    const Complex& at(int r, int c) const { return a[static_cast<std::size_t>(r) * dim + c]; }

    static Matrix identity(int d) {
        Matrix m(d);
        for (int i = 0; i < d; ++i) m.at(i, i) = Complex{1, 0};
        return m;
    }
};

inline Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.dim != y.dim) throw std::invalid_argument("Matrix: dim mismatch");
    Matrix out(x.dim);
    for (int i = 0; i < x.dim; ++i)
        for (int k = 0; k < x.dim; ++k) {
            Complex v = x.at(i, k);
            if (v == Complex{0, 0}) continue;
            for (int j = 0; j < x.dim; ++j) out.at(i, j) += v * y.at(k, j);
        }
    return out;
}

inline Matrix adjoint(const Matrix& m) {
    Matrix out(m.dim);
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j < m.dim; ++j) out.at(i, j) = std::conj(m.at(j, i));
    return out;
}

inline Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix out(x.dim * y.dim);
    for (int i = 0; i < x.dim; ++i)
        for (int j = 0; j < x.dim; ++j) {
            if (x.at(i, j) == Complex{0, 0}) continue;
            for (int r = 0; r < y.dim; ++r)
                for (int c = 0; c < y.dim; ++c)
                    out.at(i * y.dim + r, j * y.dim + c) = x.at(i, j) * y.at(r, c);
        }
    return out;
}

inline Complex trace(const Matrix& m) {
    Complex t{0, 0};
    for (int i = 0; i < m.dim; ++i) t += m.at(i, i);
    return t;
}

inline Complex trace_product(const Matrix& x, const Matrix& y) {
    // tr[X Y] without forming the product.
    Complex t{0, 0};
    for (int i = 0; i < x.dim; ++i)
        for (int k = 0; k < x.dim; ++k) t += x.at(i, k) * y.at(k, i);
    return t;
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) worst = std::max(worst, std::abs(x.a[i] - y.a[i]));
    return worst;
}

inline double max_abs(const Matrix& x) {
    double worst = 0.0;
    for (const auto& v : x.a) worst = std::max(worst, std::abs(v));
    return worst;
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
    for (int i = 0; i < m.dim; ++i)
        for (int j = i; j < m.dim; ++j)
            if (std::abs(m.at(i, j) - std::conj(m.at(j, i))) > tol) return false;
    return true;
}

inline Matrix pauli(int s) {
    Matrix m(2);
    switch (s) {
        case 0: m.at(0, 0) = m.at(1, 1) = Complex{1, 0}; break;
        case 1: m.at(0, 1) = m.at(1, 0) = Complex{1, 0}; break;
        case 2: m.at(0, 1) = Complex{0, -1}; m.at(1, 0) = Complex{0, 1}; break;
        case 3: m.at(0, 0) = Complex{1, 0}; m.at(1, 1) = Complex{-1, 0}; break;
        default: throw std::invalid_argument("pauli: index 0..3");
    }
    return m;
}

// Word digit j (base-4) selects the factor at site j: site 0 is the leftmost
// tensor factor, matching kron(site0, kron(site1, ...)).
inline Matrix pauli_word_matrix(int n, std::uint64_t word) {
    Matrix out = pauli(static_cast<int>(word & 3));
    for (int j = 1; j < n; ++j) out = kron(out, pauli(static_cast<int>((word >> (2 * j)) & 3)));
    return out;
}

// Sparse Pauli-side expansion: word (base-4 packed) -> coefficient.
struct PauliObservable {
    int n = 0;
    std::vector<std::pair<std::uint64_t, Complex>> coeffs;  // sorted by word

    int degree() const {
        int d = 0;
        for (const auto& [w, c] : coeffs) {
            int count = 0;
            for (int j = 0; j < n; ++j) count += ((w >> (2 * j)) & 3) != 0;
            d = std::max(d, count);
        }
        return d;
    }

    Complex at(std::uint64_t word) const {
        auto it = std::lower_bound(coeffs.begin(), coeffs.end(), word,
                                   [](const auto& e, std::uint64_t k) { return e.first < k; });
        if (it != coeffs.end() && it->first == word) return it->second;
        return Complex{0, 0};
    }

    void sort_and_compact() {
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<std::pair<std::uint64_t, Complex>> merged;
        for (const auto& [k, v] : coeffs) {
            if (!merged.empty() && merged.back().first == k)
                merged.back().second += v;
            else
                merged.emplace_back(k, v);
        }
        std::erase_if(merged, [](const auto& e) { return std::abs(e.second) < kSparseDrop; });
        coeffs = std::move(merged);
    }
};

inline double coeff_lp_norm(const PauliObservable& o, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("coeff_lp_norm: p > 0");
    double acc = 0.0;
    for (const auto& [w, c] : o.coeffs) acc += std::pow(std::abs(c), p);
    return std::pow(acc, 1.0 / p);
}

namespace detail {

// Interleaved layout: base-4 digit j holds (row bit, col bit) of tensor
// factor j. Factor 0 is the leftmost (highest matrix bits), matching kron.
inline std::vector<Complex> to_interleaved(const Matrix& m, int n) {
    std::vector<Complex> buf(m.a.size());
    const int dim = m.dim;
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            std::uint64_t key = 0;
            for (int j = 0; j < n; ++j) {
                int bit = n - 1 - j;
                key |= static_cast<std::uint64_t>(((r >> bit) & 1) | (((c >> bit) & 1) << 1))
                       << (2 * j);
            }
            buf[key] = m.at(r, c);
        }
    return buf;
}

inline Matrix from_interleaved(const std::vector<Complex>& buf, int n) {
    Matrix m(1 << n);
    for (int r = 0; r < m.dim; ++r)
        for (int c = 0; c < m.dim; ++c) {
            std::uint64_t key = 0;
            for (int j = 0; j < n; ++j) {
                int bit = n - 1 - j;
                key |= static_cast<std::uint64_t>(((r >> bit) & 1) | (((c >> bit) & 1) << 1))
                       << (2 * j);
            }
            m.at(r, c) = buf[key];
        }
    return m;
}

}  // namespace detail

// A_s = 2^{-n} tr[sigma_s A], computed by a per-site radix-4 butterfly.
inline PauliObservable pauli_expand(const Matrix& m, int n) {
    if (n < 1 || n > 10) throw ResourceLimitError("pauli_expand: n in [1,10]");
    if (m.dim != (1 << n)) throw std::invalid_argument("pauli_expand: dim != 2^n");
    auto buf = detail::to_interleaved(m, n);
    const Complex half{0.5, 0.0};
    const Complex ihalf{0.0, 0.5};
    for (int site = 0; site < n; ++site) {
        const std::size_t stride = std::size_t{1} << (2 * site);
        for (std::size_t base = 0; base < buf.size(); base += stride * 4) {
            for (std::size_t off = 0; off < stride; ++off) {
                std::size_t i0 = base + off;
                Complex m00 = buf[i0], m10 = buf[i0 + stride], m01 = buf[i0 + 2 * stride],
                        m11 = buf[i0 + 3 * stride];
                buf[i0] = (m00 + m11) * half;
                buf[i0 + stride] = (m01 + m10) * half;
                buf[i0 + 2 * stride] = (m01 - m10) * ihalf;
                buf[i0 + 3 * stride] = (m00 - m11) * half;
            }
        }
    }
    PauliObservable out;
    out.n = n;
    for (std::size_t w = 0; w < buf.size(); ++w)
        if (std::abs(buf[w]) >= kSparseDrop) out.coeffs.emplace_back(w, buf[w]);
    return out;
}

inline Matrix pauli_synthesize(const PauliObservable& o) {
    if (o.n < 1 || o.n > 10) throw ResourceLimitError("pauli_synthesize: n in [1,10]");
    std::vector<Complex> buf(std::size_t{1} << (2 * o.n), Complex{0, 0});
    for (const auto& [w, c] : o.coeffs) buf[w] = c;
    const Complex i1{0.0, 1.0};
    for (int site = 0; site < o.n; ++site) {
        const std::size_t stride = std::size_t{1} << (2 * site);
        for (std::size_t base = 0; base < buf.size(); base += stride * 4) {
            for (std::size_t off = 0; off < stride; ++off) {
                std::size_t i0 = base + off;
                Complex c0 = buf[i0], c1 = buf[i0 + stride], c2 = buf[i0 + 2 * stride],
                        c3 = buf[i0 + 3 * stride];
                buf[i0] = c0 + c3;                 // m00
                buf[i0 + stride] = c1 + i1 * c2;   // m10
                buf[i0 + 2 * stride] = c1 - i1 * c2;  // m01
                buf[i0 + 3 * stride] = c0 - c3;    // m11
            }
        }
    }
    return detail::from_interleaved(buf, o.n);
}

// sigma_j sigma_k + sigma_k sigma_j = 2 delta_jk for 1 <= j,k <= 3.
inline CheckReport pauli_anticommutation_check() {
    double worst = 0.0;
    for (int j = 1; j <= 3; ++j)
        for (int k = 1; k <= 3; ++k) {
            Matrix lhs = pauli(j) * pauli(k);
            Matrix rhs = pauli(k) * pauli(j);
            for (std::size_t i = 0; i < lhs.a.size(); ++i) lhs.a[i] += rhs.a[i];
            Matrix expect(2);
            if (j == k) expect = Matrix::identity(2);
            for (auto& v : expect.a) v *= 2.0;
            worst = std::max(worst, max_abs_diff(lhs, expect));
        }
    CheckReport r;
    r.check = "quantum.pauli-anticommutation";
    r.lhs = worst;
    r.rhs = 1e-15;
    r.constant_tag = "sigma_j sigma_k + sigma_k sigma_j = 2 delta_jk";
    r.pass = worst <= 1e-15;
    return r;
}

inline std::pair<Matrix, Matrix> clock_shift(int order) {
    if (order < 2) throw std::invalid_argument("clock_shift: K >= 2");
    Matrix x(order), z(order);
    for (int j = 0; j < order; ++j) {
        x.at((j + 1) % order, j) = Complex{1, 0};
        z.at(j, j) = cyclic::root_of_unity(order, j);
    }
    return {x, z};
}

// Single-site X^l Z^m: maps |j> to omega^{jm} |j+l>.
inline Matrix xz_site(int order, int l, int m) {
    Matrix w(order);
    for (int j = 0; j < order; ++j)
        w.at(((j + l) % order + order) % order, j) = cyclic::root_of_unity(order, static_cast<std::int64_t>(j) * m);
    return w;
}

inline Matrix hw_word(int order, std::span<const int> l, std::span<const int> m) {
    if (l.size() != m.size() || l.empty()) throw std::invalid_argument("hw_word: arity mismatch");
    double dim = std::pow(static_cast<double>(order), static_cast<double>(l.size()));
    if (dim > 1024.0) throw ResourceLimitError("hw_word: K^n > 1024");
    Matrix out = xz_site(order, l[0], m[0]);
    for (std::size_t j = 1; j < l.size(); ++j) out = kron(out, xz_site(order, l[j], m[j]));
    return out;
}

// Sparse Heisenberg-Weyl expansion; key packs (l_1..l_n, m_1..m_n) base K.
struct HWObservable {
    int K = 0;
    int n = 0;
    std::vector<std::pair<std::uint64_t, Complex>> coeffs;

    std::pair<std::vector<int>, std::vector<int>> word(std::uint64_t key) const {
        auto digits = cyclic::unpack_index(key, K, 2 * n);
        std::vector<int> l(digits.begin(), digits.begin() + n);
        std::vector<int> m(digits.begin() + n, digits.end());
        return {l, m};
    }

    int degree() const {
        int d = 0;
        for (const auto& [key, c] : coeffs) {
            auto digits = cyclic::unpack_index(key, K, 2 * n);
            d = std::max(d, std::accumulate(digits.begin(), digits.end(), 0));
        }
        return d;
    }

    void sort_and_compact() {
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<std::pair<std::uint64_t, Complex>> merged;
        for (const auto& [k, v] : coeffs) {
            if (!merged.empty() && merged.back().first == k)
                merged.back().second += v;
            else
                merged.emplace_back(k, v);
        }
        std::erase_if(merged, [](const auto& e) { return std::abs(e.second) < kSparseDrop; });
        coeffs = std::move(merged);
    }
};

inline double coeff_lp_norm(const HWObservable& o, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("coeff_lp_norm: p > 0");
    double acc = 0.0;
    for (const auto& [w, c] : o.coeffs) acc += std::pow(std::abs(c), p);
    return std::pow(acc, 1.0 / p);
}

inline Matrix hw_synthesize(const HWObservable& o) {
    Matrix acc(static_cast<int>(std::pow(o.K, o.n)));
    for (const auto& [key, c] : o.coeffs) {
        auto [l, m] = o.word(key);
        Matrix w = hw_word(o.K, l, m);
        for (std::size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += c * w.a[i];
    }
    return acc;
}

inline Matrix matrix_power(const Matrix& m, int k) {
    Matrix out = Matrix::identity(m.dim);
    for (int i = 0; i < k; ++i) out = out * m;
    return out;
}

// (X^l Z^m)^k = omega^{k(k-1)lm/2} X^{kl} Z^{km} and the exchange relation
// X^{l1}Z^{m1} X^{l2}Z^{m2} = omega^{l2 m1 - l1 m2} X^{l2}Z^{m2} X^{l1}Z^{m1}.
inline CheckReport hw_commutation_check(int order) {
    if (!is_prime(order) || order > 7) throw std::invalid_argument("hw_commutation_check: prime K <= 7");
    double worst = 0.0;
    for (int l = 0; l < order; ++l)
        for (int m = 0; m < order; ++m) {
            Matrix w = xz_site(order, l, m);
            for (int k = 0; k < order; ++k) {
                Matrix lhs = matrix_power(w, k);
                std::int64_t phase = static_cast<std::int64_t>(k) * (k - 1) / 2 % order * l % order * m;
                Matrix rhs = xz_site(order, k * l % order, k * m % order);
                Complex ph = cyclic::root_of_unity(order, phase);
                for (auto& v : rhs.a) v *= ph;
                worst = std::max(worst, max_abs_diff(lhs, rhs));
            }
        }
    for (int l1 = 0; l1 < order; ++l1)
        for (int m1 = 0; m1 < order; ++m1)
            for (int l2 = 0; l2 < order; ++l2)
                for (int m2 = 0; m2 < order; ++m2) {
                    Matrix lhs = xz_site(order, l1, m1) * xz_site(order, l2, m2);
                    Matrix rhs = xz_site(order, l2, m2) * xz_site(order, l1, m1);
                    Complex ph = cyclic::root_of_unity(
                        order, static_cast<std::int64_t>(l2) * m1 - static_cast<std::int64_t>(l1) * m2);
                    for (auto& v : rhs.a) v *= ph;
                    worst = std::max(worst, max_abs_diff(lhs, rhs));
                }
    CheckReport r;
    r.check = "quantum.hw-commutation(K=" + std::to_string(order) + ")";
    r.lhs = worst;
    r.rhs = 1e-12;
    r.constant_tag = "power and exchange identities";
    r.pass = worst <= 1e-12;
    return r;
}

struct EigenPair {
    Complex value;
    std::vector<Complex> vector;
};

// Numeric eigensystem of X^l Z^m, phase-fixed (first sizable component made
// real positive) and sorted by eigenvalue angle. For odd prime K and
// (l,m) in {(1,*),(0,1)} the eigenvalue set must match Omega_K.
inline std::vector<EigenPair> hw_eigensystem(int order, int l, int m) {
    if (l < 0 || l >= order || m < 0 || m >= order || (l == 0 && m == 0))
        throw std::invalid_argument("hw_eigensystem: (l,m) in Z_K^2 \\ {0}");
    if (std::gcd(l, m) != 1) throw std::invalid_argument("hw_eigensystem: gcd(l,m) must be 1");
    Matrix w = xz_site(order, l, m);
    Eigen::MatrixXcd a(order, order);
    for (int r = 0; r < order; ++r)
        for (int c = 0; c < order; ++c) a(r, c) = w.at(r, c);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("hw_eigensystem: eigensolver failed");

    std::vector<EigenPair> pairs(order);
    for (int i = 0; i < order; ++i) {
        pairs[i].value = solver.eigenvalues()(i);
        pairs[i].vector.resize(order);
        for (int r = 0; r < order; ++r) pairs[i].vector[r] = solver.eigenvectors()(r, i);
        // Normalize and fix the phase.
        double nrm = 0.0;
        for (const auto& v : pairs[i].vector) nrm += std::norm(v);
        nrm = std::sqrt(nrm);
        for (auto& v : pairs[i].vector) v /= nrm;
        for (const auto& v : pairs[i].vector)
            if (std::abs(v) > 1e-9) {
                Complex ph = std::conj(v) / std::abs(v);
                for (auto& u : pairs[i].vector) u *= ph;
                break;
            }
    }
    std::sort(pairs.begin(), pairs.end(), [](const EigenPair& x, const EigenPair& y) {
        return std::arg(x.value) < std::arg(y.value);
    });

    // Orthonormality across pairs.
    for (int i = 0; i < order; ++i)
        for (int j = i + 1; j < order; ++j) {
            Complex dot{0, 0};
            for (int r = 0; r < order; ++r) dot += std::conj(pairs[i].vector[r]) * pairs[j].vector[r];
            if (std::abs(dot) > 1e-10) throw std::runtime_error("hw_eigensystem: eigenvectors not orthogonal");
        }

    const bool in_sigma = (l == 1) || (l == 0 && m == 1);
    if (in_sigma && is_prime(order) && order % 2 == 1) {
        std::vector<bool> used(order, false);
        for (int t = 0; t < order; ++t) {
            Complex target = cyclic::root_of_unity(order, t);
            bool matched = false;
            for (int i = 0; i < order; ++i) {
                if (used[i]) continue;
                if (std::abs(pairs[i].value - target) <= 1e-8) {
                    used[i] = true;
                    matched = true;
                    break;
                }
            }
            if (!matched) throw std::runtime_error("hw_eigensystem: eigenvalue set is not Omega_K");
        }
    }
    return pairs;
}

// The K+1 generator subgroups cover Z_K x Z_K and meet only at the origin.
inline CheckReport sigma_cover_check(int order) {
    if (!is_prime(order)) throw std::invalid_argument("sigma_cover_check: composite K rejected");
    std::vector<std::pair<int, int>> gens;
    for (int m = 0; m < order; ++m) gens.emplace_back(1, m);
    gens.emplace_back(0, 1);

    std::vector<int> hits(order * order, 0);
    for (auto [l, m] : gens)
        for (int k = 0; k < order; ++k) hits[(k * l % order) * order + (k * m % order)] += 1;

    bool pass = static_cast<int>(gens.size()) == order + 1;
    // Origin hit by every subgroup, everything else exactly once.
    for (int idx = 0; idx < order * order; ++idx) {
        int expect = (idx == 0) ? order + 1 : 1;
        if (hits[idx] != expect) pass = false;
    }
    CheckReport r;
    r.check = "quantum.sigma-cover(K=" + std::to_string(order) + ")";
    r.lhs = static_cast<double>(*std::max_element(hits.begin() + 1, hits.end()));
    r.rhs = 1.0;
    r.constant = static_cast<double>(order + 1);
    r.constant_tag = "|Sigma_K| = K+1 subgroups of size K";
    r.pass = pass;
    return r;
}

// For unitary B with B^k = 1 and A B = lambda B A with lambda != 1, every
// eigenvector eta of B has <eta, A eta> = 0.
inline CheckReport orthogonality_lemma_check(const Matrix& a, const Matrix& b) {
    if (a.dim != b.dim) throw std::invalid_argument("orthogonality_lemma_check: dim mismatch");
    if (max_abs_diff(b * adjoint(b), Matrix::identity(b.dim)) > 1e-10)
        throw std::invalid_argument("orthogonality_lemma_check: B not unitary");
    bool finite_order = false;
    Matrix p = Matrix::identity(b.dim);
    for (int k = 1; k <= 64; ++k) {
        p = p * b;
        if (max_abs_diff(p, Matrix::identity(b.dim)) <= 1e-10) {
            finite_order = true;
            break;
        }
    }
    if (!finite_order) throw std::invalid_argument("orthogonality_lemma_check: B has no small order");

    Matrix ab = a * b;
    Matrix ba = b * a;
    int best_r = 0, best_c = 0;
    double best = 0.0;
    for (int r = 0; r < b.dim; ++r)
        for (int c = 0; c < b.dim; ++c)
            if (std::abs(ba.at(r, c)) > best) {
                best = std::abs(ba.at(r, c));
                best_r = r;
                best_c = c;
            }
    if (best == 0.0) throw std::invalid_argument("orthogonality_lemma_check: BA vanishes");
    Complex lambda = ab.at(best_r, best_c) / ba.at(best_r, best_c);
    Matrix scaled = ba;
    for (auto& v : scaled.a) v *= lambda;
    if (max_abs_diff(ab, scaled) > 1e-10)
        throw std::invalid_argument("orthogonality_lemma_check: AB != lambda BA");
    if (std::abs(lambda - Complex{1, 0}) <= 1e-10)
        throw std::invalid_argument("orthogonality_lemma_check: lambda = 1, hypothesis violated");

    Eigen::MatrixXcd eb(b.dim, b.dim);
    for (int r = 0; r < b.dim; ++r)
        for (int c = 0; c < b.dim; ++c) eb(r, c) = b.at(r, c);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(eb);
    double worst = 0.0;
    for (int i = 0; i < b.dim; ++i) {
        Eigen::VectorXcd eta = solver.eigenvectors().col(i);
        Complex acc{0, 0};
        for (int r = 0; r < b.dim; ++r) {
            Complex av{0, 0};
            for (int c = 0; c < b.dim; ++c) av += a.at(r, c) * eta(c);
            acc += std::conj(eta(r)) * av;
        }
        worst = std::max(worst, std::abs(acc));
    }
    CheckReport r;
    r.check = "quantum.orthogonality-lemma";
    r.lhs = worst;
    r.rhs = 1e-10;
    r.constant_tag = "<eta, A eta> = 0 for lambda != 1";
    r.pass = worst <= 1e-10;
    return r;
}

// --- qubit reduction -------------------------------------------------------

// Unit eigenvectors of sigma_kappa for eigenvalue eps, phase already
// canonical (first nonzero component real positive).
inline std::array<Complex, 2> pauli_eigenvector(int kappa, int eps) {
    const double s = 1.0 / std::sqrt(2.0);
    if (kappa == 1) return {Complex{s, 0}, eps > 0 ? Complex{s, 0} : Complex{-s, 0}};
    if (kappa == 2) return {Complex{s, 0}, eps > 0 ? Complex{0, s} : Complex{0, -s}};
    if (kappa == 3)
        return eps > 0 ? std::array<Complex, 2>{Complex{1, 0}, Complex{0, 0}}
                       : std::array<Complex, 2>{Complex{0, 0}, Complex{1, 0}};
    throw std::invalid_argument("pauli_eigenvector: kappa in 1..3");
}

// rho_j from the three eigenprojectors selected by the sign bits.
inline Matrix qubit_site_density(int eps1, int eps2, int eps3) {
    Matrix rho(2);
    int eps[3] = {eps1, eps2, eps3};
    for (int kappa = 1; kappa <= 3; ++kappa) {
        auto v = pauli_eigenvector(kappa, eps[kappa - 1]);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) rho.at(r, c) += v[r] * std::conj(v[c]) / 3.0;
    }
    return rho;
}

// Classical shadow of a Pauli observable: a function of 3n signs whose value
// is tr[A rho(eps)], with rho built per site from eigenprojectors. Carries
// both the trace-evaluating route and the exact sparse spectrum
// (coefficient 3^{-l} A_s at the matching multilinear monomial).
struct QubitReduction {
    int n = 0;
    PauliObservable source;
    cube::WalshSpectrum spectrum;  // over 3n variables

    // Variable layout: index (kappa-1)*n + j holds eps^{(kappa)}_j.
    double eval_trace(std::span<const std::uint64_t> point) const {
        auto sign = [&](int kappa, int j) {
            int var = (kappa - 1) * n + j;
            return ((point[var >> 6] >> (var & 63)) & 1) ? -1 : 1;
        };
        Complex total{0, 0};
        for (const auto& [word, coeff] : source.coeffs) {
            Complex prod{1, 0};
            for (int j = 0; j < n; ++j) {
                int s = static_cast<int>((word >> (2 * j)) & 3);
                if (s == 0) continue;
                Matrix rho = qubit_site_density(sign(1, j), sign(2, j), sign(3, j));
                prod *= trace_product(pauli(s), rho);
            }
            total += coeff * prod;
        }
        return total.real();
    }
};

inline QubitReduction reduce_qubit(const PauliObservable& obs) {
    for (const auto& [w, c] : obs.coeffs)
        if (std::abs(c.imag()) > 1e-12)
            throw std::invalid_argument("reduce_qubit: coefficients must be real (hermitian input)");
    QubitReduction red;
    red.n = obs.n;
    red.source = obs;
    red.spectrum.n = 3 * obs.n;
    for (const auto& [word, coeff] : obs.coeffs) {
        std::vector<int> vars;
        int support = 0;
        for (int j = 0; j < obs.n; ++j) {
            int s = static_cast<int>((word >> (2 * j)) & 3);
            if (s == 0) continue;
            vars.push_back((s - 1) * obs.n + j);
            ++support;
        }
        std::sort(vars.begin(), vars.end());
        cube::Subset sub;
        for (int v : vars) sub.push(v);
        double value = coeff.real() * std::pow(3.0, -support);
        if (std::abs(value) >= kSparseDrop) red.spectrum.coeffs.emplace_back(sub, value);
    }
    red.spectrum.sort_and_compact();

    // The two routes must agree: per-site traces against the coefficient law.
    Rng rng(0x9eb1u);
    const std::size_t words = static_cast<std::size_t>((3 * obs.n + 63) / 64);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::uint64_t> point(words);
        for (auto& w : point) w = rng.u64();
        double via_trace = red.eval_trace(point);
        double via_spectrum = 0.0;
        for (const auto& [sub, c] : red.spectrum.coeffs)
            via_spectrum += sub.odd_on(point) ? -c : c;
        if (std::abs(via_trace - via_spectrum) > 1e-10)
            throw std::runtime_error("reduce_qubit: trace and coefficient routes disagree");
    }
    return red;
}

// --- qudit reduction -------------------------------------------------------

// Decompose (l, m) != 0 as k * generator with the generator in Sigma_K.
inline std::pair<int, int> sigma_decompose(int order, int l, int m) {
    if (l == 0 && m == 0) throw std::invalid_argument("sigma_decompose: zero word");
    if (l != 0) {
        // Generator (1, m l^{-1}); k = l.
        int inv = 0;
        for (int t = 1; t < order; ++t)
            if (t * l % order == 1) inv = t;
        return {m * inv % order, l};  // generator index = second component of (1, t)
    }
    return {order, m};  // generator (0,1) sits at index K
}

// f_A over Omega_K^{(K+1)n}: trace route through eigenprojector densities and
// the exact coefficient polynomial with (K+1)^{-kappa} weights and the
// omega^{-k(k-1)lm/2} phases.
struct QuditReduction {
    int K = 0;
    int n = 0;
    HWObservable source;
    cyclic::CyclicPolynomial poly;  // (K+1)*n variables
    std::vector<std::vector<std::vector<Complex>>> eigvecs;  // [gen][eigenvalue t][component]

    // Point: digits t in {0..K-1}^{(K+1)n}; variable gen*n + j holds the
    // eigenvalue label omega^t assigned to generator gen at site j.
    Matrix site_density(std::span<const std::uint8_t> digits, int j) const {
        Matrix rho(K);
        for (int gen = 0; gen <= K; ++gen) {
            const auto& v = eigvecs[gen][digits[gen * n + j]];
            for (int r = 0; r < K; ++r)
                for (int c = 0; c < K; ++c)
                    rho.at(r, c) += v[r] * std::conj(v[c]) / static_cast<double>(K + 1);
        }
        return rho;
    }

    Complex eval_trace(std::span<const std::uint8_t> digits) const {
        Complex total{0, 0};
        for (const auto& [key, coeff] : source.coeffs) {
            auto [l, m] = source.word(key);
            Complex prod{1, 0};
            for (int j = 0; j < n; ++j) {
                if (l[j] == 0 && m[j] == 0) continue;
                Matrix rho = site_density(digits, j);
                prod *= trace_product(xz_site(K, l[j], m[j]), rho);
            }
            total += coeff * prod;
        }
        return total;
    }
};

inline QuditReduction reduce_qudit(const HWObservable& obs) {
    if (!is_prime(obs.K) || obs.K < 3 || obs.K > 5)
        throw std::invalid_argument("reduce_qudit: K in {3,5}");
    if (obs.n < 1 || obs.n > 3) throw ResourceLimitError("reduce_qudit: n <= 3");
    QuditReduction red;
    red.K = obs.K;
    red.n = obs.n;
    red.source = obs;

    // Eigenvectors for each generator, labeled by eigenvalue omega^t.
    red.eigvecs.resize(obs.K + 1);
    for (int gen = 0; gen <= obs.K; ++gen) {
        int l = (gen < obs.K) ? 1 : 0;
        int m = (gen < obs.K) ? gen : 1;
        auto pairs = hw_eigensystem(obs.K, l, m);
        red.eigvecs[gen].resize(obs.K);
        for (int t = 0; t < obs.K; ++t) {
            Complex target = cyclic::root_of_unity(obs.K, t);
            bool found = false;
            for (const auto& p : pairs)
                if (std::abs(p.value - target) <= 1e-8) {
                    red.eigvecs[gen][t] = p.vector;
                    found = true;
                    break;
                }
            if (!found) throw std::runtime_error("reduce_qudit: missing eigenvalue label");
        }
    }

    red.poly = cyclic::CyclicPolynomial(obs.K, (obs.K + 1) * obs.n);
    for (const auto& [key, coeff] : obs.coeffs) {
        auto [l, m] = obs.word(key);
        std::vector<std::uint8_t> alpha(static_cast<std::size_t>(obs.K + 1) * obs.n, 0);
        Complex phase{1, 0};
        int kappa = 0;
        for (int j = 0; j < obs.n; ++j) {
            if (l[j] == 0 && m[j] == 0) continue;
            auto [gen, k] = sigma_decompose(obs.K, l[j], m[j]);
            int gl = (gen < obs.K) ? 1 : 0;
            int gm = (gen < obs.K) ? gen : 1;
            alpha[static_cast<std::size_t>(gen) * obs.n + j] = static_cast<std::uint8_t>(k);
            std::int64_t e = static_cast<std::int64_t>(k) * (k - 1) / 2 % obs.K * gl % obs.K * gm;
            phase *= cyclic::root_of_unity(obs.K, -e);
            ++kappa;
        }
        Complex c = coeff * phase * std::pow(static_cast<double>(obs.K + 1), -kappa);
        red.poly.add_term(alpha, c);
    }
    red.poly.sort_and_compact();

    // Trace route against the coefficient polynomial at random points.
    Rng rng(0x0dd1u);
    const int vars = (obs.K + 1) * obs.n;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::uint8_t> digits(vars);
        for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(obs.K));
        std::vector<Complex> z(vars);
        for (int v = 0; v < vars; ++v) z[v] = cyclic::root_of_unity(obs.K, digits[v]);
        Complex via_trace = red.eval_trace(digits);
        Complex via_poly = eval_cyclic(red.poly, z);
        if (std::abs(via_trace - via_poly) > 1e-9)
            throw std::runtime_error("reduce_qudit: trace and coefficient routes disagree");
    }

    // ||f_A||_p >= (K+1)^{-d} ||A||_p on the shared support scale.
    const int d = obs.degree();
    for (double p : {1.0, 2.0 * std::max(d, 1) / (std::max(d, 1) + 1.0), 2.0}) {
        double lhs = 0.0;
        for (const auto& [k, c] : red.poly.coeffs) lhs += std::pow(std::abs(c), p);
        lhs = std::pow(lhs, 1.0 / p);
        double rhs = coeff_lp_norm(obs, p) * std::pow(static_cast<double>(obs.K + 1), -d);
        if (lhs < rhs * (1.0 - 1e-9))
            throw std::runtime_error("reduce_qudit: coefficient norm inequality failed");
    }
    return red;
}

// Largest singular value by power iteration on A^dagger A; hermitian inputs
// reuse A itself as the second factor.
inline double operator_norm(const Matrix& m, double rel_tol = 1e-9, int max_iters = 10000,
                            std::uint64_t seed = 0xb441u) {
    if (m.dim < 1 || m.dim > 1024) throw ResourceLimitError("operator_norm: dim <= 1024");
    if (max_abs(m) == 0.0) return 0.0;
    const bool herm = is_hermitian(m);
    const Matrix mh = herm ? m : adjoint(m);

    Rng rng(splitmix64(seed));
    auto random_unit = [&] {
        std::vector<Complex> v(m.dim);
        double nrm = 0.0;
        for (auto& x : v) {
            x = Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)};
            nrm += std::norm(x);
        }
        nrm = std::sqrt(nrm);
        for (auto& x : v) x /= nrm;
        return v;
    };
    auto apply = [&](const std::vector<Complex>& v) {
        std::vector<Complex> t(m.dim, Complex{0, 0});
        for (int r = 0; r < m.dim; ++r)
            for (int c = 0; c < m.dim; ++c) t[r] += m.at(r, c) * v[c];
        std::vector<Complex> u(m.dim, Complex{0, 0});
        for (int r = 0; r < m.dim; ++r)
            for (int c = 0; c < m.dim; ++c) u[r] += mh.at(r, c) * t[c];
        return u;  // (A^dagger A) v, or A^2 v in the hermitian case
    };

    auto v = random_unit();
    double lambda = 0.0;
    int restarts = 0;
    double residual = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        auto u = apply(v);
        double unorm = 0.0;
        for (const auto& x : u) unorm += std::norm(x);
        unorm = std::sqrt(unorm);
        if (unorm < 1e-300) {
            // Landed in the kernel; restart from a fresh direction.
            if (++restarts > 5) throw std::runtime_error("operator_norm: repeated kernel restarts");
            v = random_unit();
            continue;
        }
        double next = 0.0;
        for (int r = 0; r < m.dim; ++r) next += (std::conj(v[r]) * u[r]).real();
        next = std::abs(next);
        for (auto& x : u) x /= unorm;
        residual = 0.0;
        for (int r = 0; r < m.dim; ++r) residual = std::max(residual, std::abs(u[r] * unorm - next * v[r]));
        bool stagnant = it > 0 && std::abs(next - lambda) <= 1e-16 * next && residual > rel_tol * next;
        if (it > 0 && std::abs(next - lambda) <= rel_tol * next && residual <= std::sqrt(rel_tol) * next) {
            return std::sqrt(next);
        }
        if (stagnant && restarts < 5) {
            ++restarts;
            v = random_unit();
            lambda = 0.0;
            continue;
        }
        lambda = next;
        v = std::move(u);
    }
    throw std::runtime_error("operator_norm: no convergence after " + std::to_string(max_iters) +
                             " iterations; residual " + std::to_string(residual));
}

// ||A-hat||_{2d/(d+1)} <= 3^d * C * ||A||.
inline CheckReport qubit_bh_check(const PauliObservable& obs, double bh_boolean_constant) {
    const int d = std::max(obs.degree(), 1);
    const double p = 2.0 * d / (d + 1.0);
    CheckReport r;
    r.check = "quantum.qubit-bh";
    r.lhs = coeff_lp_norm(obs, p);
    r.rhs = operator_norm(pauli_synthesize(obs));
    r.constant = std::pow(3.0, d) * bh_boolean_constant;
    r.constant_tag = "3^d * BH_boolean";
    r.pass = r.lhs <= r.constant * r.rhs * (1.0 + 1e-9) + 1e-12;
    return r;
}

// Intermediate link of the chain: the reduction's coefficient norm against
// its sup over all sign patterns, by exhaustive enumeration (3n <= 18).
inline CheckReport qubit_chain_check(const PauliObservable& obs, double bh_boolean_constant) {
    if (3 * obs.n > 18) throw ResourceLimitError("qubit_chain_check: 3n <= 18");
    auto red = reduce_qubit(obs);
    const int d = std::max(obs.degree(), 1);
    const double p = 2.0 * d / (d + 1.0);
    double lhs = cube::coeff_lp_norm(red.spectrum, p);
    double sup = 0.0;
    const std::uint64_t total = std::uint64_t{1} << (3 * obs.n);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double v = 0.0;
        for (const auto& [sub, c] : red.spectrum.coeffs) {
            std::uint64_t w = mask;
            v += sub.odd_on(std::span<const std::uint64_t>(&w, 1)) ? -c : c;
        }
        sup = std::max(sup, std::abs(v));
    }
    CheckReport r;
    r.check = "quantum.qubit-chain";
    r.lhs = lhs;
    r.rhs = sup;
    r.constant = bh_boolean_constant;
    r.constant_tag = "BH_boolean on the reduced function";
    r.pass = lhs <= bh_boolean_constant * sup * (1.0 + 1e-9) + 1e-12;
    return r;
}

}  // namespace bhlab::quantum

#endif  // BHLAB_QUANTUM_HPP
