#ifndef BHLAB_BH_CORE_HPP
#define BHLAB_BH_CORE_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bhlab/boolean_cube.hpp"
#include "bhlab/common.hpp"

namespace bhlab::bh {

// Dense order-d tensor (a_i)_{i in [n]^d}, row-major with the first index slowest.
struct MixedTensor {
    int d = 0;
    int n = 0;
    std::vector<Complex> a;

    MixedTensor() = default;
    MixedTensor(int d_, int n_) : d(d_), n(n_) {
        if (d < 1 || n < 1) throw std::invalid_argument("MixedTensor: d,n must be positive");
        double count = std::pow(static_cast<double>(n), d);
        if (count > 1e6) throw ResourceLimitError("MixedTensor: n^d > 1e6");
        a.assign(static_cast<std::size_t>(count), Complex{0.0, 0.0});
    }

    std::size_t index(std::span<const int> i) const {
        std::size_t idx = 0;
        for (int t = 0; t < d; ++t) idx = idx * n + static_cast<std::size_t>(i[t]);
        return idx;
    }
};

// Nested norm with the last index innermost:
//   (sum_{i_1} ( ... (sum_{i_d} |a|^{p_d})^{p_{d-1}/p_d} ... )^{p_1/p_2})^{1/p_1}
inline double mixed_lp_norm(const MixedTensor& t, std::span<const double> p) {
    if (static_cast<int>(p.size()) != t.d) throw std::invalid_argument("mixed_lp_norm: need d exponents");
    for (double e : p)
        if (!(e > 0.0)) throw std::invalid_argument("mixed_lp_norm: exponents must be positive");
    std::vector<double> cur(t.a.size());
    for (std::size_t i = 0; i < t.a.size(); ++i) cur[i] = std::abs(t.a[i]);
    for (int axis = t.d - 1; axis >= 0; --axis) {
        const double e = p[axis];
        std::size_t outer = cur.size() / t.n;
        std::vector<double> next(outer);
        for (std::size_t i = 0; i < outer; ++i) {
            double acc = 0.0;
            for (int j = 0; j < t.n; ++j) acc += std::pow(cur[i * t.n + j], e);
            next[i] = std::pow(acc, 1.0 / e);
        }
        cur = std::move(next);
    }
    return cur[0];
}

// Both sides of the mixed-norm inequality at block size k:
// lhs = (sum |a|^{2d/(d+1)})^{(d+1)/2d},
// rhs = geometric mean over |S|=k of
//       (sum_{i_S} (sum_{i_{S^c}} |a|^2)^{k/(k+1)})^{(k+1)/2k}.
// Guarantee under test: lhs <= rhs.
inline std::pair<double, double> blei_sides(const MixedTensor& t, int k) {
    if (k < 1 || k > t.d) throw std::invalid_argument("blei_sides: need 1 <= k <= d");
    const int d = t.d, n = t.n;
    const double p = 2.0 * d / (d + 1.0);
    double lhs_acc = 0.0;
    for (const auto& v : t.a) lhs_acc += std::pow(std::abs(v), p);
    const double lhs = std::pow(lhs_acc, 1.0 / p);

    // Enumerate axis subsets S with |S| = k.
    std::vector<int> comb(k);
    std::iota(comb.begin(), comb.end(), 0);
    double log_sum = 0.0;
    int subsets = 0;
    for (;;) {
        std::vector<bool> in_s(d, false);
        for (int c : comb) in_s[c] = true;
        // Bucket the squared moduli by the joint index over S axes.
        std::size_t buckets = 1;
        for (int i = 0; i < k; ++i) buckets *= n;
        std::vector<double> sq(buckets, 0.0);
        std::vector<int> idx(d, 0);
        for (std::size_t flat = 0; flat < t.a.size(); ++flat) {
            std::size_t key = 0;
            for (int axis = 0; axis < d; ++axis)
                if (in_s[axis]) key = key * n + idx[axis];
            sq[key] += std::norm(t.a[flat]);
            for (int axis = d - 1; axis >= 0; --axis) {
                if (++idx[axis] < n) break;
                idx[axis] = 0;
            }
        }
        double acc = 0.0;
        const double inner_e = static_cast<double>(k) / (k + 1.0);
        for (double s : sq) acc += std::pow(s, inner_e);
        double mixed = std::pow(acc, (k + 1.0) / (2.0 * k));
        log_sum += std::log(std::max(mixed, 1e-300));
        ++subsets;
        // Next k-combination of [d].
        int pos = k - 1;
        while (pos >= 0 && comb[pos] == d - k + pos) --pos;
        if (pos < 0) break;
        ++comb[pos];
        for (int q = pos + 1; q < k; ++q) comb[q] = comb[q - 1] + 1;
    }
    const double rhs = std::exp(log_sum / subsets);
    return {lhs, rhs};
}

// lhs = (sum |a_ij|^{4/3})^{3/4}; rhs = max of |sum a_ij z_i w_j| over the
// M-point root-of-unity grid on each circle (a lower bound for the polydisc sup).
inline std::pair<double, double> littlewood_sides(const std::vector<Complex>& a, int n, int grid_m) {
    if (n < 1 || static_cast<int>(a.size()) != n * n)
        throw std::invalid_argument("littlewood_sides: need an n x n matrix");
    if (n > 8) throw ResourceLimitError("littlewood_sides: n > 8");
    if (grid_m < 1) throw std::invalid_argument("littlewood_sides: grid must be positive");
    double total = std::pow(static_cast<double>(grid_m), 2 * n);
    if (total > 1e8) throw ResourceLimitError("littlewood_sides: grid M^(2n) > 1e8");

    double lhs_acc = 0.0;
    for (const auto& v : a) lhs_acc += std::pow(std::abs(v), 4.0 / 3.0);
    const double lhs = std::pow(lhs_acc, 3.0 / 4.0);

    std::vector<Complex> roots(grid_m);
    for (int t = 0; t < grid_m; ++t)
        roots[t] = std::polar(1.0, 2.0 * kPi * t / grid_m);

    const std::uint64_t points = [&] {
        std::uint64_t r = 1;
        for (int i = 0; i < n; ++i) r *= grid_m;
        return r;
    }();

    double best = 0.0;
    std::vector<int> zdig(n, 0);
    std::vector<Complex> col(n);
    for (std::uint64_t zi = 0; zi < points; ++zi) {
        for (int j = 0; j < n; ++j) {
            Complex acc{0.0, 0.0};
            for (int i = 0; i < n; ++i) acc += a[i * n + j] * roots[zdig[i]];
            col[j] = acc;
        }
        std::vector<int> wdig(n, 0);
        for (std::uint64_t wi = 0; wi < points; ++wi) {
            Complex acc{0.0, 0.0};
            for (int j = 0; j < n; ++j) acc += col[j] * roots[wdig[j]];
            best = std::max(best, std::abs(acc));
            for (int j = 0; j < n; ++j) {
                if (++wdig[j] < grid_m) break;
                wdig[j] = 0;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (++zdig[i] < grid_m) break;
            zdig[i] = 0;
        }
    }
    return {lhs, best};
}

// Symmetric d-linear form with L(x,...,x) = P(x).
struct MultilinearForm {
    int d = 0;
    int n = 0;
    std::vector<double> c;  // dense [n]^d, row-major

    // Contract one axis at a time; O(n^d) per evaluation.
    double eval(std::span<const std::span<const double>> args) const {
        if (static_cast<int>(args.size()) != d) throw std::invalid_argument("MultilinearForm::eval: need d arguments");
        std::vector<double> cur = c;
        for (int axis = d - 1; axis >= 0; --axis) {
            std::size_t outer = cur.size() / n;
            std::vector<double> next(outer, 0.0);
            for (std::size_t i = 0; i < outer; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += cur[i * n + j] * args[axis][j];
                next[i] = acc;
            }
            cur = std::move(next);
        }
        return cur[0];
    }

    // L(x,...,x,y,...,y) with k copies of x.
    double eval_split(std::span<const double> x, std::span<const double> y, int k) const {
        std::vector<std::span<const double>> args(d);
        for (int t = 0; t < d; ++t) args[t] = (t < k) ? x : y;
        return eval(args);
    }

    double eval_diagonal(std::span<const double> x) const {
        std::vector<std::span<const double>> args(d, x);
        return eval(args);
    }
};

// Build the unique symmetric form from a homogeneous degree-d spectrum:
// coefficient a_{i_1..i_d}/d! at every permutation of the monomial's index set.
inline MultilinearForm polarize(const cube::WalshSpectrum& s) {
    int d = -1;
    for (const auto& [sub, v] : s.coeffs) {
        if (std::abs(v) < kSparseDrop) continue;
        if (d < 0) d = sub.popcount();
        if (sub.popcount() != d) throw std::invalid_argument("polarize: spectrum not homogeneous");
    }
    if (d <= 0) throw std::invalid_argument("polarize: need a nonzero homogeneous spectrum");
    if (d > 5) throw ResourceLimitError("polarize: d > 5");
    if (s.n > 12) throw ResourceLimitError("polarize: n > 12");
    MultilinearForm L;
    L.d = d;
    L.n = s.n;
    L.c.assign(static_cast<std::size_t>(std::pow(static_cast<double>(s.n), d)), 0.0);
    double fact = 1.0;
    for (int t = 2; t <= d; ++t) fact *= t;
    for (const auto& [sub, v] : s.coeffs) {
        if (std::abs(v) < kSparseDrop) continue;
        std::vector<int> ids(sub.ix.begin(), sub.ix.begin() + sub.size);
        std::sort(ids.begin(), ids.end());
        do {
            std::size_t idx = 0;
            for (int t = 0; t < d; ++t) idx = idx * s.n + static_cast<std::size_t>(ids[t]);
            L.c[idx] = v / fact;
        } while (std::next_permutation(ids.begin(), ids.end()));
    }
    return L;
}

// Vertex max of the diagonal polynomial; exact for multi-affine P.
inline double multilinear_sup(const MultilinearForm& L) {
    // Recover the spectrum from strictly increasing index tuples and use the
    // fast synthesis path instead of 2^n full contractions.
    cube::WalshSpectrum s;
    s.n = L.n;
    std::vector<int> comb(L.d);
    std::iota(comb.begin(), comb.end(), 0);
    double fact = 1.0;
    for (int t = 2; t <= L.d; ++t) fact *= t;
    for (;;) {
        std::size_t idx = 0;
        for (int t = 0; t < L.d; ++t) idx = idx * L.n + static_cast<std::size_t>(comb[t]);
        if (std::abs(L.c[idx]) > 0.0) {
            cube::Subset sub;
            for (int i : comb) sub.push(i);
            s.coeffs.emplace_back(sub, L.c[idx] * fact);
        }
        int pos = L.d - 1;
        while (pos >= 0 && comb[pos] == L.n - L.d + pos) --pos;
        if (pos < 0) break;
        ++comb[pos];
        for (int q = pos + 1; q < L.d; ++q) comb[q] = comb[q - 1] + 1;
    }
    s.sort_and_compact();
    if (s.coeffs.empty()) return 0.0;
    return cube::sup_norm(cube::inverse_walsh(s));
}

inline double polarization_bound(int d, int k) {
    auto powi = [](double b, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    };
    auto fact = [](int m) {
        double r = 1.0;
        for (int i = 2; i <= m; ++i) r *= i;
        return r;
    };
    // 0^0 = 1 at the endpoints.
    double kk = (k == 0) ? 1.0 : powi(k, k);
    double mm = (d - k == 0) ? 1.0 : powi(d - k, d - k);
    return powi(1.0 + std::sqrt(2.0), d) * powi(d, d) / (kk * mm) * fact(k) * fact(d - k) / fact(d);
}

// |L(x,..,x,y,..,y)| <= bound * sup|P| for random x,y in [-1,1]^n.
inline CheckReport polarization_bound_check(const MultilinearForm& L, int k, int trials,
                                            std::uint64_t seed = 12345) {
    if (k < 1 || k > L.d) throw std::invalid_argument("polarization_bound_check: need 1 <= k <= d");
    const double bound = polarization_bound(L.d, k);
    const double sup = multilinear_sup(L);
    Rng rng(splitmix64(seed));
    double worst = 0.0;
    std::vector<double> x(L.n), y(L.n);
    for (int t = 0; t < trials; ++t) {
        for (auto& v : x) v = rng.real(-1.0, 1.0);
        for (auto& v : y) v = rng.real(-1.0, 1.0);
        worst = std::max(worst, std::abs(L.eval_split(x, y, k)));
    }
    CheckReport r;
    r.check = "bh.polarization-bound(d=" + std::to_string(L.d) + ",k=" + std::to_string(k) + ")";
    r.lhs = worst;
    r.rhs = sup;
    r.constant = bound;
    r.constant_tag = "(1+sqrt(2))^d d^d/(k^k (d-k)^(d-k)) * k!(d-k)!/d!";
    r.pass = worst <= bound * sup * (1.0 + 1e-9) + 1e-12;
    return r;
}

// C(d,k) = ((k+1)/(k-1))^{(d-k)/2} (1+sqrt(2))^d d^d / (k^k (d-k)^{d-k})
inline double inductive_constant(int d, int k) {
    if (!(1 < k && k < d)) throw std::invalid_argument("inductive_constant: need 1 < k < d");
    double ratio = std::pow((k + 1.0) / (k - 1.0), 0.5 * (d - k));
    double num = std::pow(1.0 + std::sqrt(2.0), d) * std::pow(static_cast<double>(d), d);
    double den = std::pow(static_cast<double>(k), k) * std::pow(static_cast<double>(d - k), d - k);
    return ratio * num / den;
}

enum class BhBase {
    littlewood,       // B(2) = sqrt(2) * (1+sqrt(2))^2, valid for all bounded real inputs
    boolean_optimal,  // B(2) = 2^{1/2}, valid for +-1 valued inputs
};

struct BhUpperBound {
    double value = 0.0;
    std::string base_note;
};

// Chain the inductive inequality down to the degree-2 base:
// B(1)=1, B(d) = min_{1<k<d} C(d,k) B(k).
inline BhUpperBound bh_constant_upper(int d, BhBase base = BhBase::littlewood) {
    if (d < 1) throw std::invalid_argument("bh_constant_upper: d >= 1");
    std::string note = (base == BhBase::boolean_optimal)
                           ? "B(2)=2^(1/2) [boolean-valued inputs]"
                           : "B(2)=sqrt(2)*(1+sqrt(2))^2";
    std::vector<double> b(static_cast<std::size_t>(std::max(d, 2)) + 1, 0.0);
    b[1] = 1.0;
    b[2] = (base == BhBase::boolean_optimal) ? std::sqrt(2.0)
                                             : std::sqrt(2.0) * std::pow(1.0 + std::sqrt(2.0), 2);
    for (int m = 3; m <= d; ++m) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 2; k < m; ++k) best = std::min(best, inductive_constant(m, k) * b[k]);
        b[m] = best;
    }
    return {b[d], note};
}

// ||f-hat||_{2d/(d+1)} / ||f||_inf with d the spectrum degree; a lower bound
// witness for the best constant.
inline double bh_ratio(const cube::WalshSpectrum& s) {
    if (s.coeffs.empty()) throw std::invalid_argument("bh_ratio: zero spectrum");
    const int d = cube::degree(s);
    const double sup = cube::sup_norm(cube::inverse_walsh(s));
    if (sup <= 0.0) throw std::invalid_argument("bh_ratio: zero function");
    if (d == 0) return std::abs(s.coeffs[0].second) / sup;
    const double p = 2.0 * d / (d + 1.0);
    return cube::coeff_lp_norm(s, p) / sup;
}

}  // namespace bhlab::bh

#endif  // BHLAB_BH_CORE_HPP
