#ifndef BHLAB_CYCLIC_HPP
#define BHLAB_CYCLIC_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "bhlab/common.hpp"
#include "bhlab/linalg.hpp"

namespace bhlab::cyclic {

inline Complex root_of_unity(int order, std::int64_t power) {
    std::int64_t p = ((power % order) + order) % order;
    return std::polar(1.0, 2.0 * kPi * static_cast<double>(p) / order);
}

// Multi-indices alpha in {0..K-1}^n pack into a u64 in base K, digit j for
// variable j. Keeps maps ordered and comparisons O(1).
inline std::uint64_t pack_index(std::span<const std::uint8_t> digits, int order) {
    std::uint64_t key = 0;
    for (std::size_t j = digits.size(); j-- > 0;) {
        if (digits[j] >= order) throw std::invalid_argument("pack_index: digit >= K");
        key = key * static_cast<std::uint64_t>(order) + digits[j];
    }
    return key;
}

inline std::vector<std::uint8_t> unpack_index(std::uint64_t key, int order, int n) {
    std::vector<std::uint8_t> digits(n);
    for (int j = 0; j < n; ++j) {
        digits[j] = static_cast<std::uint8_t>(key % order);
        key /= order;
    }
    return digits;
}

// f(z) = sum_alpha a_alpha z^alpha on Omega_K^n, extendable to C^n.
struct CyclicPolynomial {
    int K = 0;
    int n = 0;
    std::vector<std::pair<std::uint64_t, Complex>> coeffs;  // sorted by packed key

    CyclicPolynomial() = default;
    CyclicPolynomial(int order, int vars) : K(order), n(vars) {
        if (K < 2) throw std::invalid_argument("CyclicPolynomial: K >= 2");
        if (vars < 1) throw std::invalid_argument("CyclicPolynomial: n >= 1");
        if (static_cast<double>(vars) * std::log2(static_cast<double>(order)) > 62.0)
            throw ResourceLimitError("CyclicPolynomial: K^n exceeds the packed index range");
    }

    void add_term(std::span<const std::uint8_t> alpha, Complex a) {
        if (static_cast<int>(alpha.size()) != n)
            throw std::invalid_argument("CyclicPolynomial::add_term: wrong arity");
        coeffs.emplace_back(pack_index(alpha, K), a);
    }

    void sort_and_compact() {
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<std::pair<std::uint64_t, Complex>> merged;
        merged.reserve(coeffs.size());
        for (const auto& [k, v] : coeffs) {
            if (!merged.empty() && merged.back().first == k)
                merged.back().second += v;
            else
                merged.emplace_back(k, v);
        }
        std::erase_if(merged, [](const auto& e) { return std::abs(e.second) < kSparseDrop; });
        coeffs = std::move(merged);
    }

    Complex at(std::uint64_t key) const {
        auto it = std::lower_bound(coeffs.begin(), coeffs.end(), key,
                                   [](const auto& e, std::uint64_t k) { return e.first < k; });
        if (it != coeffs.end() && it->first == key) return it->second;
        return Complex{0.0, 0.0};
    }

    int degree() const {
        int d = 0;
        for (const auto& [k, v] : coeffs) {
            auto digits = unpack_index(k, K, n);
            d = std::max(d, std::accumulate(digits.begin(), digits.end(), 0));
        }
        return d;
    }

    int max_support_size() const {
        int s = 0;
        for (const auto& [k, v] : coeffs) {
            auto digits = unpack_index(k, K, n);
            int cnt = 0;
            for (auto d : digits) cnt += d != 0;
            s = std::max(s, cnt);
        }
        return s;
    }

    CyclicPolynomial& operator+=(const CyclicPolynomial& other) {
        if (K != other.K || n != other.n) throw std::invalid_argument("CyclicPolynomial: shape mismatch");
        coeffs.insert(coeffs.end(), other.coeffs.begin(), other.coeffs.end());
        sort_and_compact();
        return *this;
    }

    CyclicPolynomial scaled(Complex c) const {
        CyclicPolynomial out = *this;
        for (auto& [k, v] : out.coeffs) v *= c;
        return out;
    }

    CyclicPolynomial minus(const CyclicPolynomial& other) const {
        CyclicPolynomial out = *this;
        for (const auto& [k, v] : other.coeffs) out.coeffs.emplace_back(k, -v);
        out.sort_and_compact();
        return out;
    }
};

inline Complex eval_cyclic(const CyclicPolynomial& f, std::span<const Complex> z) {
    if (static_cast<int>(z.size()) != f.n) throw std::invalid_argument("eval_cyclic: arity mismatch");
    Complex acc{0.0, 0.0};
    for (const auto& [key, a] : f.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        Complex mono{1.0, 0.0};
        for (int j = 0; j < f.n; ++j)
            for (int rep = 0; rep < digits[j]; ++rep) mono *= z[j];
        acc += a * mono;
    }
    return acc;
}

// Exact max of |f| over the P-th-roots grid (z_j = omega_P^{t_j}). The digit
// odometer updates each term's exponent sum mod P incrementally, so a step
// costs O(#terms) amortized.
inline double sup_on_roots(const CyclicPolynomial& f, int points_per_circle) {
    const int P = points_per_circle;
    if (P < 1) throw std::invalid_argument("sup_on_roots: grid must be positive");
    check_points_cap(std::pow(static_cast<double>(P), f.n), "sup_on_roots");
    if (f.coeffs.empty()) return 0.0;

    const std::size_t terms = f.coeffs.size();
    std::vector<std::uint8_t> alpha(terms * f.n);
    std::vector<Complex> coeff(terms);
    std::vector<int> expo(terms, 0);
    for (std::size_t t = 0; t < terms; ++t) {
        auto digits = unpack_index(f.coeffs[t].first, f.K, f.n);
        std::copy(digits.begin(), digits.end(), alpha.begin() + t * f.n);
        coeff[t] = f.coeffs[t].second;
    }
    std::vector<Complex> omega(P);
    for (int e = 0; e < P; ++e) omega[e] = root_of_unity(P, e);

    std::uint64_t total = 1;
    for (int j = 0; j < f.n; ++j) total *= static_cast<std::uint64_t>(P);

    std::vector<int> t(f.n, 0);
    double best = 0.0;
    for (std::uint64_t step = 0;; ++step) {
        Complex acc{0.0, 0.0};
        for (std::size_t q = 0; q < terms; ++q) acc += coeff[q] * omega[expo[q]];
        best = std::max(best, std::abs(acc));
        if (step + 1 == total) break;
        // Advance the odometer; each digit bump adds alpha_j to every exponent.
        for (int j = 0;; ++j) {
            for (std::size_t q = 0; q < terms; ++q) {
                expo[q] += alpha[q * f.n + j];
                if (expo[q] >= P) expo[q] -= P;
            }
            if (++t[j] < P) break;
            t[j] = 0;
        }
    }
    return best;
}

inline double sup_norm_cyclic(const CyclicPolynomial& f) { return sup_on_roots(f, f.K); }

inline double sup_norm_omega_2k(const CyclicPolynomial& f) { return sup_on_roots(f, 2 * f.K); }

struct GridSup {
    double value = 0.0;
    bool lower_bound_only = true;
};

// Torus sup approximated from below on the M-point grid; M must be a multiple
// of 2K so the Omega_K and Omega_2K points are included.
inline GridSup sup_norm_torus_grid(const CyclicPolynomial& f, int grid_m) {
    if (grid_m < 2 * f.K || grid_m % (2 * f.K) != 0)
        throw std::invalid_argument("sup_norm_torus_grid: M must be a positive multiple of 2K");
    return {sup_on_roots(f, grid_m), true};
}

// Seeded sparse instance with degree <= max_deg, for sweeps.
inline CyclicPolynomial random_cyclic_polynomial(int order, int n, int max_deg, int terms,
                                                 std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    CyclicPolynomial f(order, n);
    for (int t = 0; t < terms; ++t) {
        std::vector<std::uint8_t> alpha(n, 0);
        for (int tries = 0; tries < 200; ++tries) {
            int total = 0;
            for (auto& d : alpha) {
                d = static_cast<std::uint8_t>(rng.below(order));
                total += d;
            }
            if (total <= max_deg) break;
        }
        int total = 0;
        for (auto d : alpha) total += d;
        if (total > max_deg) std::fill(alpha.begin(), alpha.end(), std::uint8_t{0});
        f.add_term(alpha, Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)});
    }
    f.sort_and_compact();
    if (f.coeffs.empty()) {
        std::vector<std::uint8_t> alpha(n, 0);
        alpha[0] = 1;
        f.add_term(alpha, Complex{1.0, 0.0});
        f.sort_and_compact();
    }
    return f;
}

// tau factor for a multi-index at xi = omega_K^xi_power.
inline Complex tau_factor(int order, std::span<const std::uint8_t> alpha, int xi_power) {
    Complex tau{1.0, 0.0};
    for (auto d : alpha)
        if (d != 0) tau *= Complex{1.0, 0.0} - root_of_unity(order, static_cast<std::int64_t>(xi_power) * d);
    return tau;
}

// Polynomial on Omega_K^n x Omega_2^n, keyed by (alpha, sign-variable mask).
struct ProductPolynomial {
    int K = 0;
    int n = 0;
    std::vector<std::tuple<std::uint64_t, std::uint64_t, Complex>> terms;

    CyclicPolynomial restrict_x_ones() const {
        CyclicPolynomial out(K, n);
        for (const auto& [alpha, mask, c] : terms) out.coeffs.emplace_back(alpha, c);
        out.sort_and_compact();
        return out;
    }

    // Exact sup over Omega_K^n x {-1,1}^n by enumeration.
    double sup_norm() const {
        check_points_cap(std::pow(static_cast<double>(K), n) * std::pow(2.0, n),
                         "ProductPolynomial::sup_norm");
        if (terms.empty()) return 0.0;
        const std::size_t count = terms.size();
        std::vector<std::uint8_t> alpha(count * n);
        std::vector<std::uint64_t> masks(count);
        std::vector<Complex> coeff(count);
        std::vector<int> expo(count, 0);
        for (std::size_t t = 0; t < count; ++t) {
            auto digits = unpack_index(std::get<0>(terms[t]), K, n);
            std::copy(digits.begin(), digits.end(), alpha.begin() + t * n);
            masks[t] = std::get<1>(terms[t]);
            coeff[t] = std::get<2>(terms[t]);
        }
        std::vector<Complex> omega(K);
        for (int e = 0; e < K; ++e) omega[e] = root_of_unity(K, e);
        std::uint64_t z_total = 1;
        for (int j = 0; j < n; ++j) z_total *= static_cast<std::uint64_t>(K);
        const std::uint64_t x_total = std::uint64_t{1} << n;

        std::vector<int> t(n, 0);
        std::vector<Complex> v(count);
        double best = 0.0;
        for (std::uint64_t step = 0;; ++step) {
            for (std::size_t q = 0; q < count; ++q) v[q] = coeff[q] * omega[expo[q]];
            for (std::uint64_t x = 0; x < x_total; ++x) {
                Complex acc{0.0, 0.0};
                for (std::size_t q = 0; q < count; ++q)
                    acc += (std::popcount(masks[q] & x) & 1) ? -v[q] : v[q];
                best = std::max(best, std::abs(acc));
            }
            if (step + 1 == z_total) break;
            for (int j = 0;; ++j) {
                for (std::size_t q = 0; q < count; ++q) {
                    expo[q] += alpha[q * n + j];
                    if (expo[q] >= K) expo[q] -= K;
                }
                if (++t[j] < K) break;
                t[j] = 0;
            }
        }
        return best;
    }
};

// Keep the maximal-support monomials, scale each by tau_alpha^(xi), and tag
// the support with a sign variable: D_xi f (z, x).
inline ProductPolynomial pseudo_projection(const CyclicPolynomial& f, int xi_power) {
    if (xi_power % f.K == 0) throw std::invalid_argument("pseudo_projection: xi must not be 1");
    const int ell = f.max_support_size();
    ProductPolynomial out;
    out.K = f.K;
    out.n = f.n;
    for (const auto& [key, a] : f.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        std::uint64_t mask = 0;
        int supp = 0;
        for (int j = 0; j < f.n; ++j)
            if (digits[j] != 0) {
                mask |= std::uint64_t{1} << j;
                ++supp;
            }
        if (supp != ell) continue;
        out.terms.emplace_back(key, mask, tau_factor(f.K, digits, xi_power) * a);
    }
    return out;
}

// The x = 1 restriction of the pseudo-projection, a polynomial on Omega_K^n.
inline CyclicPolynomial pseudo_projection_restricted(const CyclicPolynomial& f, int xi_power) {
    return pseudo_projection(f, xi_power).restrict_x_ones();
}

// ||D_xi f|| <= (2 + 2 sqrt(2))^ell ||f|| for every xi != 1, both sides exact.
inline CheckReport pseudo_projection_bound_check(const CyclicPolynomial& f) {
    const int ell = f.max_support_size();
    const double bound = std::pow(2.0 + 2.0 * std::sqrt(2.0), ell);
    const double fnorm = sup_norm_cyclic(f);
    double worst = 0.0;
    for (int xi = 1; xi < f.K; ++xi)
        worst = std::max(worst, pseudo_projection(f, xi).sup_norm());
    CheckReport r;
    r.check = "cyclic.pseudo-projection-bound";
    r.lhs = worst;
    r.rhs = fnorm;
    r.constant = bound;
    r.constant_tag = "(2+2*sqrt(2))^ell";
    r.pass = worst <= bound * fnorm * (1.0 + 1e-9) + 1e-12;
    return r;
}

// Partition of the coefficients by support size; re-sums to f exactly.
inline std::vector<std::pair<int, CyclicPolynomial>> support_split(const CyclicPolynomial& f) {
    std::vector<std::pair<int, CyclicPolynomial>> parts;
    for (const auto& [key, a] : f.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        int supp = 0;
        for (auto d : digits) supp += d != 0;
        auto it = std::find_if(parts.begin(), parts.end(),
                               [&](const auto& p) { return p.first == supp; });
        if (it == parts.end()) {
            parts.emplace_back(supp, CyclicPolynomial(f.K, f.n));
            it = parts.end() - 1;
        }
        it->second.coeffs.emplace_back(key, a);
    }
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [supp, poly] : parts) poly.sort_and_compact();
    return parts;
}

struct InseparablePartition {
    int ell = 0;
    std::vector<CyclicPolynomial> groups;  // ordered by (Re tau, Im tau)
    std::vector<Complex> taus;
    std::vector<std::string> warnings;
};

inline constexpr double kTauGroupTol = 1e-9;

// Group the monomials of a support-homogeneous polynomial by their tau value
// at xi = omega. Distinct exponent multisets can share a tau, so grouping is
// numeric: sort by (Re, Im) and cluster within kTauGroupTol.
inline InseparablePartition inseparable_partition(const CyclicPolynomial& f_ell) {
    InseparablePartition out;
    if (f_ell.coeffs.empty()) return out;
    struct Entry {
        std::uint64_t key;
        Complex coeff;
        Complex tau;
    };
    std::vector<Entry> entries;
    int ell = -1;
    for (const auto& [key, a] : f_ell.coeffs) {
        auto digits = unpack_index(key, f_ell.K, f_ell.n);
        int supp = 0;
        for (auto d : digits) supp += d != 0;
        if (ell < 0) ell = supp;
        if (supp != ell)
            throw std::invalid_argument("inseparable_partition: input not support-homogeneous");
        entries.push_back({key, a, tau_factor(f_ell.K, digits, 1)});
    }
    out.ell = ell;
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.tau.real() != b.tau.real()) return a.tau.real() < b.tau.real();
        if (a.tau.imag() != b.tau.imag()) return a.tau.imag() < b.tau.imag();
        return a.key < b.key;
    });
    for (const auto& e : entries) {
        if (out.groups.empty() || std::abs(e.tau - out.taus.back()) > kTauGroupTol) {
            if (!out.taus.empty()) {
                double gap = std::abs(e.tau - out.taus.back());
                if (gap <= 100.0 * kTauGroupTol)
                    out.warnings.push_back("tau gap " + std::to_string(gap) +
                                           " is close to the grouping tolerance");
            }
            out.groups.emplace_back(f_ell.K, f_ell.n);
            out.taus.push_back(e.tau);
        }
        out.groups.back().coeffs.emplace_back(e.key, e.coeff);
    }
    for (auto& g : out.groups) g.sort_and_compact();
    return out;
}

struct VandermondeExtraction {
    std::vector<CyclicPolynomial> groups;
    std::vector<double> eta_l1;  // row 1-norms of the inverse system
};

// Recover the inseparable groups of the top support level from iterated
// pseudo-projections: solve V_L g = (D^1 f, ..., D^J f).
inline VandermondeExtraction vandermonde_extract(const CyclicPolynomial& f, int ell) {
    if (ell != f.max_support_size())
        throw std::invalid_argument("vandermonde_extract: ell must be the maximal support size");
    // tau values of the top level define the system.
    CyclicPolynomial top(f.K, f.n);
    for (const auto& [key, a] : f.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        int supp = 0;
        for (auto d : digits) supp += d != 0;
        if (supp == ell) top.coeffs.emplace_back(key, a);
    }
    top.sort_and_compact();
    auto partition = inseparable_partition(top);
    const int J = static_cast<int>(partition.groups.size());
    if (J == 0) return {};

    std::vector<Complex> v(J * J);
    for (int row = 0; row < J; ++row)
        for (int col = 0; col < J; ++col)
            v[row * J + col] = std::pow(partition.taus[col], row + 1);
    std::vector<Complex> vinv;
    try {
        vinv = linalg::invert(v, J);
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "vandermonde_extract: singular system; tau grouping tolerance failure");
    }

    // g_j = sum_k eta_jk D^k f; per monomial that is a_alpha sum_k eta_jk tau_alpha^k.
    VandermondeExtraction out;
    out.groups.assign(J, CyclicPolynomial(f.K, f.n));
    out.eta_l1.assign(J, 0.0);
    for (int j = 0; j < J; ++j)
        for (int k = 0; k < J; ++k) out.eta_l1[j] += std::abs(vinv[j * J + k]);
    for (const auto& [key, a] : top.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        Complex tau = tau_factor(f.K, digits, 1);
        Complex tpow{1.0, 0.0};
        std::vector<Complex> tau_powers(J);
        for (int k = 0; k < J; ++k) {
            tpow *= tau;
            tau_powers[k] = tpow;
        }
        for (int j = 0; j < J; ++j) {
            Complex c{0.0, 0.0};
            for (int k = 0; k < J; ++k) c += vinv[j * J + k] * tau_powers[k];
            c *= a;
            if (std::abs(c) >= kSparseDrop) out.groups[j].coeffs.emplace_back(key, c);
        }
    }
    for (auto& g : out.groups) g.sort_and_compact();
    return out;
}

// d_K = prod_{k=1}^{K-1} (1 - omega^k); the same product with omega^j in place
// of omega is independent of j for prime K.
inline Complex dK_constant(int order) {
    if (!is_prime(order) || order < 3)
        throw std::invalid_argument("dK_constant: prime K >= 3 only");
    Complex d{1.0, 0.0};
    for (int k = 1; k < order; ++k) d *= Complex{1.0, 0.0} - root_of_unity(order, k);
    for (int j = 2; j < order; ++j) {
        Complex dj{1.0, 0.0};
        for (int k = 1; k < order; ++k)
            dj *= Complex{1.0, 0.0} - root_of_unity(order, static_cast<std::int64_t>(k) * j);
        if (std::abs(dj - d) > 1e-12 * std::abs(d))
            throw std::runtime_error("dK_constant: exponent independence failed");
    }
    return d;
}

// ||f_j|| <= C_K^d (1 + C_K^d)^{ell-j} ||f|| for every support part.
inline CheckReport splitting_bound_check(const CyclicPolynomial& f) {
    const Complex dk = dK_constant(f.K);
    const double ck = std::pow(2.0 + 2.0 * std::sqrt(2.0), f.K - 1) / std::abs(dk);
    const int d = f.degree();
    const int ell = f.max_support_size();
    const double ckd = std::pow(ck, d);
    const double fnorm = sup_norm_cyclic(f);
    CheckReport r;
    r.check = "cyclic.splitting-bound";
    r.constant_tag = "C_K^d (1+C_K^d)^(ell-j), C_K=(2+2*sqrt(2))^(K-1)/|d_K|";
    r.pass = true;
    r.rhs = fnorm;
    double worst_ratio = 0.0;
    for (const auto& [j, part] : support_split(f)) {
        double bound = ckd * std::pow(1.0 + ckd, ell - j);
        double pnorm = sup_norm_cyclic(part);
        if (pnorm > bound * fnorm * (1.0 + 1e-9)) r.pass = false;
        if (fnorm > 0.0) worst_ratio = std::max(worst_ratio, pnorm / fnorm);
        r.constant = std::max(r.constant, bound);
    }
    r.lhs = worst_ratio * fnorm;
    return r;
}

// 2K x 2K moment matrix: a row of ones, cosine rows for m = 1..K, and sine
// rows for m = 1..K-1, with theta = pi/K.
inline std::vector<double> dk_matrix(int order) {
    if (order < 3) throw std::invalid_argument("dk_matrix: K >= 3");
    const int m = 2 * order;
    const double theta = kPi / order;
    std::vector<double> d(m * m, 0.0);
    for (int col = 0; col < m; ++col) d[col] = 1.0;
    for (int row = 1; row <= order; ++row)
        for (int col = 0; col < m; ++col) d[row * m + col] = std::cos(col * row * theta);
    for (int row = 1; row < order; ++row)
        for (int col = 0; col < m; ++col) d[(order + row) * m + col] = std::sin(col * row * theta);
    return d;
}

// Radius inside which the moment-matching weights stay nonnegative. The
// stability estimate gives 1/(2K ||D^{-1}||); we additionally cap at 1/(2K)^2,
// the interval the downstream constants are stated against. Shrinking the
// radius only strengthens the positivity guarantee.
inline double epsilon_star(int order) {
    const int m = 2 * order;
    auto d = dk_matrix(order);
    auto inv = linalg::invert(d, m);
    const double norm = linalg::inf_to_inf_norm(inv, m);
    const double eps = std::min(1.0 / (2.0 * order * norm), 1.0 / (4.0 * order * order));
    if (!(eps > 0.0)) throw std::runtime_error("epsilon_star: nonpositive radius");
    return eps;
}

struct MeasureSolution {
    int K = 0;
    Complex z;
    std::vector<double> weights;  // 2K nonnegative entries summing to 1
};

// Probability measure on Omega_2K matching the moments z^m for 0 <= m <= K-1.
inline MeasureSolution measure_for_point(int order, Complex z) {
    const double eps = epsilon_star(order);
    if (std::abs(z) > eps)
        throw std::domain_error("measure_for_point: |z| exceeds epsilon_*; weights may go negative");
    const int m = 2 * order;
    auto d = dk_matrix(order);
    std::vector<double> v(m, 0.0);
    v[0] = 1.0;
    Complex zp{1.0, 0.0};
    for (int p = 1; p <= order; ++p) {
        zp *= z;
        v[p] = zp.real();
        if (p <= order - 1) v[order + p] = zp.imag();
    }
    auto weights = linalg::solve(d, v, m);
    if (linalg::residual_inf(d, weights, v, m) > 1e-11)
        throw std::runtime_error("measure_for_point: linear solve residual too large");
    double sum = 0.0;
    for (auto& w : weights) {
        if (w < -1e-12) throw std::runtime_error("measure_for_point: negative weight inside radius");
        if (w < 0.0) w = 0.0;
        sum += w;
    }
    for (auto& w : weights) w /= sum;
    // Moment identities, re-checked on the cleaned weights.
    for (int p = 0; p < order; ++p) {
        Complex acc{0.0, 0.0};
        for (int k = 0; k < m; ++k) acc += weights[k] * root_of_unity(m, static_cast<std::int64_t>(k) * p);
        if (std::abs(acc - std::pow(z, p)) > 1e-10)
            throw std::runtime_error("measure_for_point: moment identity failed");
    }
    return {order, z, std::move(weights)};
}

// Torus (grid) sup against (d+1) eps*^{-d} times the exact Omega_2K sup.
// Grid refinement M vs 2M must agree within 5% before the report counts.
inline CheckReport torus_vs_2k_check(const CyclicPolynomial& f, int grid_m) {
    const int d = f.degree();
    const double eps = epsilon_star(f.K);
    const double c1 = (d + 1) * std::pow(eps, -d);
    const double coarse = sup_norm_torus_grid(f, grid_m).value;
    const double fine = sup_norm_torus_grid(f, 2 * grid_m).value;
    const double omega2k = sup_norm_omega_2k(f);
    CheckReport r;
    r.check = "cyclic.torus-vs-omega2k";
    r.lhs = std::max(coarse, fine);
    r.rhs = omega2k;
    r.constant = c1;
    r.constant_tag = "(d+1)*eps_star^-d";
    const bool grids_agree = std::abs(fine - coarse) <= 0.05 * std::max(fine, 1e-30);
    r.pass = grids_agree && r.lhs <= c1 * omega2k * (1.0 + 1e-9) + 1e-12;
    if (!grids_agree) r.details = "grid refinement disagreement";
    return r;
}

// Dilation route: grid sup <= (d+1) eps*^{-d} sup over the eps*-scaled grid.
inline CheckReport torus_dilation_check(const CyclicPolynomial& f, int grid_m) {
    const int d = f.degree();
    const double eps = epsilon_star(f.K);
    CyclicPolynomial scaled = f;
    for (auto& [key, a] : scaled.coeffs) {
        auto digits = unpack_index(key, f.K, f.n);
        int total = std::accumulate(digits.begin(), digits.end(), 0);
        a *= std::pow(eps, total);
    }
    CheckReport r;
    r.check = "cyclic.torus-dilation";
    r.lhs = sup_norm_torus_grid(f, grid_m).value;
    r.rhs = sup_norm_torus_grid(scaled, grid_m).value;
    r.constant = (d + 1) * std::pow(eps, -d);
    r.constant_tag = "(d+1)*eps_star^-d";
    r.pass = r.lhs <= r.constant * r.rhs * (1.0 + 1e-9) + 1e-12;
    return r;
}

// (sqrt(omega))^k = i (1 - omega^k)/|1 - omega^k| for k = 1..K-1.
inline CheckReport half_root_identity_check(int order) {
    if (order < 3) throw std::invalid_argument("half_root_identity_check: K >= 3");
    double worst = 0.0;
    for (int k = 1; k < order; ++k) {
        Complex lhs = std::polar(1.0, kPi * k / order);
        Complex diff = Complex{1.0, 0.0} - root_of_unity(order, k);
        Complex rhs = Complex{0.0, 1.0} * diff / std::abs(diff);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CheckReport r;
    r.check = "cyclic.half-root-identity(K=" + std::to_string(order) + ")";
    r.lhs = worst;
    r.rhs = 1e-12;
    r.constant = 1.0;
    r.constant_tag = "exact identity";
    r.pass = worst <= 1e-12;
    return r;
}

// All monomials of an inseparable group agree at (sqrt(omega),...,sqrt(omega)),
// and |g| there equals |g(1,...,1)| <= ||g|| over Omega_K^n.
inline CheckReport property_b_check(const CyclicPolynomial& g) {
    if (g.coeffs.empty()) throw std::invalid_argument("property_b_check: empty group");
    Complex common{0.0, 0.0};
    bool first = true;
    Complex value{0.0, 0.0};
    Complex at_ones{0.0, 0.0};
    for (const auto& [key, a] : g.coeffs) {
        auto digits = unpack_index(key, g.K, g.n);
        int total = std::accumulate(digits.begin(), digits.end(), 0);
        Complex mono = root_of_unity(2 * g.K, total);  // (sqrt(omega))^{|alpha|}
        if (first) {
            common = mono;
            first = false;
        } else if (std::abs(mono - common) > 1e-10) {
            throw std::invalid_argument("property_b_check: monomial values differ; mixed group");
        }
        value += a * mono;
        at_ones += a;
    }
    const double gnorm = sup_norm_cyclic(g);
    CheckReport r;
    r.check = "cyclic.property-b";
    r.lhs = std::abs(value);
    r.rhs = gnorm;
    r.constant = 1.0;
    r.constant_tag = "|g(sqrt(omega) 1)| = |g(1)| <= ||g||";
    r.pass = std::abs(std::abs(value) - std::abs(at_ones)) <= 1e-10 &&
             r.lhs <= gnorm * (1.0 + 1e-9) + 1e-12;
    return r;
}

struct K3Counterexample {
    CyclicPolynomial p;  // K=3, n=1
    Complex z0;
    double value_at_z0 = 0.0;
    double omega3_sup = 0.0;
};

// Unimodular interpolation data on Omega_3 whose analytic extension exceeds 1
// inside the triangle: |p(z0)| = (1 + 2 sqrt(3))/4 at z0 = (1 + omega)/2.
inline K3Counterexample k3_counterexample() {
    const Complex omega = root_of_unity(3, 1);
    const Complex nodes[3] = {Complex{1.0, 0.0}, omega, root_of_unity(3, 2)};
    const Complex z0 = (Complex{1.0, 0.0} + omega) / 2.0;
    // Lagrange quotients at z0 and the aligning unimodular node values.
    Complex values[3];
    for (int v = 0; v < 3; ++v) {
        Complex quot{1.0, 0.0};
        for (int u = 0; u < 3; ++u)
            if (u != v) quot *= (z0 - nodes[u]) / (nodes[v] - nodes[u]);
        values[v] = std::conj(quot) / std::abs(quot);
    }
    // Monomial coefficients from the inverse discrete Fourier transform.
    K3Counterexample out;
    out.p = CyclicPolynomial(3, 1);
    for (int a = 0; a < 3; ++a) {
        Complex c{0.0, 0.0};
        for (int t = 0; t < 3; ++t) c += values[t] * root_of_unity(3, -a * t);
        c /= 3.0;
        std::uint8_t digit = static_cast<std::uint8_t>(a);
        out.p.add_term(std::span<const std::uint8_t>(&digit, 1), c);
    }
    out.p.sort_and_compact();
    out.z0 = z0;
    out.value_at_z0 = std::abs(eval_cyclic(out.p, std::span<const Complex>(&z0, 1)));
    out.omega3_sup = sup_norm_cyclic(out.p);
    return out;
}

struct RemezChainReport {
    CheckReport chain;              // grid sup <= C1*C2 ||f||_{Omega_K}
    CheckReport single_point;      // |f(sqrt(omega) 1)| <= C2 ||f||_{Omega_K}
    std::vector<CheckReport> groups;  // per-group Property A bounds
    double c1 = 0.0;
    double c2 = 0.0;
};

// Assemble the two-step comparison: grid-torus sup against (d+1) eps*^{-d}
// times the extraction constants accumulated over support levels and groups.
inline RemezChainReport remez_chain_check(const CyclicPolynomial& f, int grid_m) {
    RemezChainReport rep;
    const int d = f.degree();
    const double eps = epsilon_star(f.K);
    rep.c1 = (d + 1) * std::pow(eps, -d);
    const double fnorm = sup_norm_cyclic(f);
    const double boost = 2.0 + 2.0 * std::sqrt(2.0);

    CyclicPolynomial residual = f;
    double residual_factor = 1.0;  // proven bound on ||residual|| / ||f||
    double c2 = 0.0;
    Complex at_sqrt{0.0, 0.0};
    {
        std::vector<Complex> pt(f.n, root_of_unity(2 * f.K, 1));
        at_sqrt = eval_cyclic(f, pt);
    }
    while (!residual.coeffs.empty()) {
        const int ell = residual.max_support_size();
        auto extraction = vandermonde_extract(residual, ell);
        const int J = static_cast<int>(extraction.groups.size());
        double level_sum = 0.0;
        CyclicPolynomial level(f.K, f.n);
        for (int j = 0; j < J; ++j) {
            double a_const = extraction.eta_l1[j] * std::pow(boost, static_cast<double>(J) * std::max(d, 1)) *
                             residual_factor;
            level_sum += a_const;
            c2 += a_const;
            CheckReport g;
            g.check = "cyclic.property-a(ell=" + std::to_string(ell) + ",j=" + std::to_string(j) + ")";
            g.lhs = sup_norm_cyclic(extraction.groups[j]);
            g.rhs = fnorm;
            g.constant = a_const;
            g.constant_tag = "|eta|_1 (2+2*sqrt(2))^(J*d) * residual chain";
            g.pass = g.lhs <= a_const * fnorm * (1.0 + 1e-9) + 1e-12;
            rep.groups.push_back(g);
            level += extraction.groups[j];
        }
        residual = residual.minus(level);
        // The extracted level cancels the top support exactly up to roundoff;
        // sweep any leftovers so the loop strictly descends.
        std::erase_if(residual.coeffs, [&](const auto& e) {
            auto digits = unpack_index(e.first, f.K, f.n);
            int supp = 0;
            for (auto dg : digits) supp += dg != 0;
            return supp >= ell;
        });
        residual_factor *= 1.0 + level_sum;
        if (ell == 0) break;
    }
    rep.c2 = c2;

    rep.single_point.check = "cyclic.remez-single-point";
    rep.single_point.lhs = std::abs(at_sqrt);
    rep.single_point.rhs = fnorm;
    rep.single_point.constant = c2;
    rep.single_point.constant_tag = "sum of property-a constants";
    rep.single_point.pass = rep.single_point.lhs <= c2 * fnorm * (1.0 + 1e-9) + 1e-12;

    rep.chain.check = "cyclic.remez-chain";
    rep.chain.lhs = sup_norm_torus_grid(f, grid_m).value;
    rep.chain.rhs = fnorm;
    rep.chain.constant = rep.c1 * rep.c2;
    rep.chain.constant_tag = "(d+1)*eps_star^-d * sum of property-a constants";
    rep.chain.pass = rep.chain.lhs <= rep.chain.constant * fnorm * (1.0 + 1e-9) + 1e-12;
    return rep;
}

}  // namespace bhlab::cyclic

#endif  // BHLAB_CYCLIC_HPP
