#ifndef BHLAB_CLI_HPP
#define BHLAB_CLI_HPP

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhlab/bh_core.hpp"
#include "bhlab/boolean_cube.hpp"
#include "bhlab/common.hpp"
#include "bhlab/cyclic.hpp"
#include "bhlab/learning.hpp"
#include "bhlab/quantum.hpp"
#include "bhlab/serialize.hpp"

namespace bhlab::cli {

namespace detail {

inline CheckReport bound_report(std::string name, double lhs, double rhs, double constant,
                                std::string tag) {
    CheckReport r;
    r.check = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.constant = constant;
    r.constant_tag = std::move(tag);
    r.pass = lhs <= constant * rhs * (1.0 + 1e-9) + 1e-12;
    return r;
}

inline CheckReport tolerance_report(std::string name, double worst, double tol, std::string tag) {
    CheckReport r;
    r.check = std::move(name);
    r.lhs = worst;
    r.rhs = tol;
    r.constant = 1.0;
    r.constant_tag = std::move(tag);
    r.pass = worst <= tol;
    return r;
}

// Random real spectrum of degree exactly d (one forced top coefficient).
inline cube::WalshSpectrum random_real_spectrum(int n, int d, int terms, std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    cube::WalshSpectrum s;
    s.n = n;
    for (int t = 0; t < terms; ++t) {
        int size = static_cast<int>(rng.below(d + 1));
        auto ids = rng.sample_without_replacement(n, size);
        std::sort(ids.begin(), ids.end());
        cube::Subset sub;
        for (int i : ids) sub.push(i);
        s.coeffs.emplace_back(sub, rng.real(-1.0, 1.0));
    }
    auto top = rng.sample_without_replacement(n, d);
    std::sort(top.begin(), top.end());
    cube::Subset sub;
    for (int i : top) sub.push(i);
    s.coeffs.emplace_back(sub, rng.pm1() * rng.real(0.25, 1.0));
    s.sort_and_compact();
    return s;
}

inline quantum::PauliObservable random_hermitian_observable(int n, int d, int terms,
                                                            std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    quantum::PauliObservable obs;
    obs.n = n;
    obs.coeffs.emplace_back(0, Complex{rng.real(-1.0, 1.0), 0.0});
    for (int t = 0; t < terms; ++t) {
        int support = 1 + static_cast<int>(rng.below(d));
        auto sites = rng.sample_without_replacement(n, support);
        std::uint64_t word = 0;
        for (int s : sites) word |= (1 + rng.below(3)) << (2 * s);
        obs.coeffs.emplace_back(word, Complex{rng.real(-1.0, 1.0), 0.0});
    }
    obs.sort_and_compact();
    if (obs.coeffs.empty()) obs.coeffs.emplace_back(0, Complex{0.5, 0.0});
    return obs;
}

inline quantum::HWObservable random_hw_observable(int order, int n, int d, int terms,
                                                  std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    quantum::HWObservable obs;
    obs.K = order;
    obs.n = n;
    for (int t = 0; t < terms; ++t) {
        std::vector<std::uint8_t> digits(2 * n, 0);
        for (int tries = 0; tries < 100; ++tries) {
            int total = 0;
            for (auto& dg : digits) {
                dg = static_cast<std::uint8_t>(rng.below(order));
                total += dg;
            }
            if (total <= d) break;
        }
        int total = 0;
        for (auto dg : digits) total += dg;
        if (total > d) std::fill(digits.begin(), digits.end(), std::uint8_t{0});
        obs.coeffs.emplace_back(cyclic::pack_index(digits, order),
                                Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)});
    }
    obs.sort_and_compact();
    if (obs.coeffs.empty()) {
        std::vector<std::uint8_t> digits(2 * n, 0);
        digits[0] = 1;
        obs.coeffs.emplace_back(cyclic::pack_index(digits, order), Complex{1.0, 0.0});
    }
    return obs;
}

// ---- verification checks ---------------------------------------------------

inline std::vector<CheckReport> check_parseval(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        int n = 4 + static_cast<int>(rep % 7);
        Rng rng(derive_seed(seed, rep));
        std::vector<double> table(std::size_t{1} << n);
        for (auto& v : table) v = rng.real(-1.0, 1.0);
        cube::CubeFunction f(n, std::move(table));
        auto s = cube::walsh_transform(f);
        double coeff_sq = 0.0;
        for (const auto& [sub, c] : s.coeffs) coeff_sq += c * c;
        double mean_sq = 0.0;
        for (double v : f.table) mean_sq += v * v;
        mean_sq /= static_cast<double>(f.table.size());
        worst = std::max(worst, std::abs(coeff_sq - mean_sq) / mean_sq);
    }
    return {tolerance_report("cube.parseval", worst, 1e-12, "sum c^2 = mean f^2")};
}

inline std::vector<CheckReport> check_roundtrip(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
        int n = 3 + static_cast<int>(rep % 8);
        Rng rng(derive_seed(seed, 100 + rep));
        std::vector<double> table(std::size_t{1} << n);
        for (auto& v : table) v = rng.real(-1.0, 1.0);
        cube::CubeFunction f(n, std::move(table));
        auto back = cube::inverse_walsh(cube::walsh_transform(f));
        for (std::size_t i = 0; i < f.table.size(); ++i)
            worst = std::max(worst, std::abs(back.table[i] - f.table[i]));
    }
    return {tolerance_report("cube.transform-roundtrip", worst, 1e-12, "inverse of transform")};
}

inline std::vector<CheckReport> check_moment_comparison(std::uint64_t seed, std::optional<int>) {
    double worst_margin = 0.0;  // max of ||f||_2 / bound, want <= 1
    int instances = 0;
    for (int rep = 0; rep < 200; ++rep) {
        int d = 1 + rep % 3;
        int n = 4 + static_cast<int>(rep % 9);
        auto s = random_real_spectrum(n, d, 8, derive_seed(seed, 200 + rep));
        auto f = cube::inverse_walsh(s);
        int deg = cube::degree(s);
        if (deg == 0) continue;
        double l2 = cube::lp_norm(f, 2.0);
        for (double p : {4.0 / 3.0, 3.0 / 2.0}) {
            double bound = std::pow(p - 1.0, -0.5 * deg) * cube::lp_norm(f, p);
            worst_margin = std::max(worst_margin, l2 / bound);
        }
        ++instances;
    }
    auto r = tolerance_report("cube.moment-comparison", worst_margin, 1.0 + 1e-12,
                              "||f||_2 <= (p-1)^{-d/2} ||f||_p");
    r.details = std::to_string(instances) + " instances";
    return {r};
}

inline std::vector<CheckReport> check_count_bound(std::uint64_t, std::optional<int>) {
    bool pass = true;
    for (int n : {5, 9, 12}) {
        for (int d : {1, 2, 3}) {
            std::int64_t count = 0;
            for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m)
                if (std::popcount(m) <= d) ++count;
            double expect = 0.0;
            for (int k = 0; k <= d; ++k) expect += binom(n, k);
            if (static_cast<double>(count) != expect) pass = false;
        }
    }
    CheckReport r;
    r.check = "cube.count-bound";
    r.lhs = pass ? 0.0 : 1.0;
    r.rhs = 0.0;
    r.constant_tag = "#(|S| <= d) = sum C(n,k)";
    r.pass = pass;
    return {r};
}

inline std::vector<CheckReport> check_helper_inequality(std::uint64_t, std::optional<int>) {
    int failures = 0;
    for (int d = 1; d <= 100; ++d)
        if (!learning::helper_inequality_holds(d)) ++failures;
    return {tolerance_report("learning.helper-inequality", failures, 0.0,
                             "(d+1)^{-d/(d+1)} + (2+sqrt(d+1))^{2/(d+1)} <= (e^4 (d+1))^{1/(d+1)}")};
}

inline std::vector<CheckReport> check_crossover(std::uint64_t, std::optional<int>) {
    learning::LearnerConfig cfg{2, 0.1, 0.1, std::sqrt(2.0)};
    std::vector<std::int64_t> ns;
    for (int e = 6; e <= 14; ++e) ns.push_back(std::int64_t{1} << e);
    auto witness = learning::sample_size_crossover(cfg, ns);
    CheckReport r;
    r.check = "learning.sample-size-crossover";
    r.lhs = static_cast<double>(witness);
    r.rhs = 0.0;
    r.constant_tag = "thresholded learner wins for all tested n >= n0";
    r.pass = witness > 0;
    r.details = "n0=" + std::to_string(witness);
    return {r};
}

inline std::vector<CheckReport> check_blei(std::uint64_t seed, std::optional<int>) {
    std::vector<CheckReport> out;
    struct Cfg { int d, k; };
    for (auto [d, k] : {Cfg{2, 1}, Cfg{3, 1}, Cfg{3, 2}}) {
        double worst = 0.0;
        for (int rep = 0; rep < 300; ++rep) {
            Rng rng(derive_seed(seed, 9000 + 100 * d + 10 * k + rep));
            bh::MixedTensor t(d, 5);
            for (auto& v : t.a) v = Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)};
            auto [lhs, rhs] = bh::blei_sides(t, k);
            worst = std::max(worst, lhs / rhs);
        }
        out.push_back(tolerance_report(
            "bh.blei(d=" + std::to_string(d) + ",k=" + std::to_string(k) + ")", worst,
            1.0 + 1e-12, "mixed-norm inequality, lhs/rhs"));
    }
    return out;
}

inline std::vector<CheckReport> check_littlewood(std::uint64_t, std::optional<int>) {
    std::vector<CheckReport> out;
    for (int n : {2, 3}) {
        std::vector<Complex> eye(n * n, Complex{0, 0});
        for (int i = 0; i < n; ++i) eye[i * n + i] = Complex{1, 0};
        auto [lhs, rhs] = bh::littlewood_sides(eye, n, 8);
        out.push_back(bound_report("bh.littlewood-diagonal(n=" + std::to_string(n) + ")", lhs,
                                   rhs, std::pow(n, -0.25) + 1e-9, "n^{3/4} vs n"));
        std::vector<Complex> fourier(n * n);
        for (int r = 0; r < n; ++r)
            for (int s = 0; s < n; ++s) fourier[r * n + s] = std::polar(1.0, 2.0 * kPi * r * s / n);
        auto [fl, fr] = bh::littlewood_sides(fourier, n, 12);
        CheckReport rep;
        rep.check = "bh.littlewood-fourier(n=" + std::to_string(n) + ")";
        rep.lhs = fl / fr;
        rep.rhs = 0.99;
        rep.constant_tag = "coefficient/sup ratio bounded below";
        rep.pass = rep.lhs >= 0.99;
        out.push_back(rep);
    }
    return out;
}

inline std::vector<CheckReport> check_polarization(std::uint64_t seed, std::optional<int>) {
    std::vector<CheckReport> out;
    for (int d = 2; d <= 4; ++d) {
        auto s = random_real_spectrum(8, d, 6, derive_seed(seed, 40 + d));
        // Keep only the top-degree part to stay homogeneous.
        cube::WalshSpectrum homo;
        homo.n = s.n;
        for (const auto& [sub, v] : s.coeffs)
            if (sub.popcount() == d) homo.coeffs.emplace_back(sub, v);
        auto form = bh::polarize(homo);
        for (int k = 1; k <= d; ++k)
            out.push_back(bh::polarization_bound_check(form, k, 300, derive_seed(seed, k)));
    }
    return out;
}

inline std::vector<CheckReport> check_boolean_ratio(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        int d = 1 + rep % 3;
        auto f = cube::random_low_degree_boolean(10, d, derive_seed(seed, rep));
        auto s = cube::walsh_transform(f);
        int deg = cube::degree(s);
        double bound = (deg == 0) ? 1.0 : std::pow(2.0, (deg - 1.0) / deg);
        worst = std::max(worst, bh::bh_ratio(s) - bound);
    }
    return {tolerance_report("bh.boolean-ratio", worst, 1e-9,
                             "ratio <= 2^{(d-1)/d} on +-1 valued instances")};
}

inline std::vector<CheckReport> check_k3(std::uint64_t, std::optional<int>) {
    auto ce = cyclic::k3_counterexample();
    const double expect = (1.0 + 2.0 * std::sqrt(3.0)) / 4.0;
    std::vector<CheckReport> out;
    out.push_back(tolerance_report("cyclic.k3.value", std::abs(ce.value_at_z0 - expect), 1e-9,
                                   "|p(z0)| = (1+2*sqrt(3))/4"));
    out.push_back(tolerance_report("cyclic.k3.sup", std::abs(ce.omega3_sup - 1.0), 1e-12,
                                   "||p|| over the cyclic grid = 1"));
    return out;
}

inline std::vector<CheckReport> check_pseudo_projection(std::uint64_t seed, std::optional<int>) {
    CheckReport agg;
    agg.check = "cyclic.pseudo-projection-bound";
    agg.constant_tag = "(2+2*sqrt(2))^ell";
    agg.pass = true;
    for (int rep = 0; rep < 100; ++rep) {
        int n = 2 + rep % 4;
        auto f = cyclic::random_cyclic_polynomial(3, n, 3, 5, derive_seed(seed, 700 + rep));
        auto r = cyclic::pseudo_projection_bound_check(f);
        if (!r.pass) agg.pass = false;
        if (r.rhs > 0.0) agg.lhs = std::max(agg.lhs, r.lhs / (r.constant * r.rhs));
    }
    agg.rhs = 1.0;
    agg.details = "100 instances, K=3, n<=5, d<=3";
    return {agg};
}

inline std::vector<CheckReport> check_dk_scaling(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    for (int order : {3, 5}) {
        for (int rep = 0; rep < 20; ++rep) {
            Rng rng(derive_seed(seed, 50 * order + rep));
            cyclic::CyclicPolynomial f(order, 4);
            for (int t = 0; t < 3; ++t) {
                std::vector<std::uint8_t> alpha(4, 0);
                auto sites = rng.sample_without_replacement(4, 2);
                for (int s : sites) alpha[s] = static_cast<std::uint8_t>(1 + rng.below(order - 1));
                f.add_term(alpha, Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)});
            }
            f.sort_and_compact();
            if (f.coeffs.empty()) continue;
            cyclic::CyclicPolynomial cur = f;
            for (int xi = 1; xi < order; ++xi) cur = cyclic::pseudo_projection_restricted(cur, xi);
            Complex scale = std::pow(cyclic::dK_constant(order), f.max_support_size());
            for (std::size_t i = 0; i < f.coeffs.size(); ++i)
                worst = std::max(worst, std::abs(cur.coeffs[i].second - scale * f.coeffs[i].second));
        }
    }
    return {tolerance_report("cyclic.dk-scaling", worst, 1e-10,
                             "iterated projections scale by d_K^ell")};
}

inline std::vector<CheckReport> check_splitting(std::uint64_t seed, std::optional<int>) {
    CheckReport agg;
    agg.check = "cyclic.splitting-bound";
    agg.constant_tag = "C_K^d (1+C_K^d)^(ell-j)";
    agg.pass = true;
    for (int rep = 0; rep < 60; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(3, 3, 3, 5, derive_seed(seed, 800 + rep));
        auto r = cyclic::splitting_bound_check(f);
        if (!r.pass) agg.pass = false;
    }
    agg.details = "60 instances, K=3";
    return {agg};
}

inline std::vector<CheckReport> check_inseparable(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    double worst = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(3, 5, 4, 8, derive_seed(seed, 900 + rep));
        for (const auto& [supp, part] : cyclic::support_split(f)) {
            auto groups = cyclic::inseparable_partition(part);
            int d = part.degree();
            double bound = std::pow(3.0 + d, std::max(d, 1));
            worst = std::max(worst, groups.groups.size() / bound);
            if (static_cast<double>(groups.groups.size()) > bound) pass = false;
        }
    }
    auto r = tolerance_report("cyclic.inseparable-count", worst, 1.0, "J_ell <= (K+d)^d");
    r.pass = pass;
    return {r};
}

inline std::vector<CheckReport> check_vandermonde(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(3, 4, 4, 6, derive_seed(seed, 1000 + rep));
        const int ell = f.max_support_size();
        auto ext = cyclic::vandermonde_extract(f, ell);
        cyclic::CyclicPolynomial top(3, 4);
        for (const auto& [key, a] : f.coeffs) {
            auto digits = cyclic::unpack_index(key, 3, 4);
            int supp = 0;
            for (auto d : digits) supp += d != 0;
            if (supp == ell) top.coeffs.emplace_back(key, a);
        }
        top.sort_and_compact();
        auto direct = cyclic::inseparable_partition(top);
        if (ext.groups.size() != direct.groups.size()) {
            worst = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < ext.groups.size(); ++j) {
            auto diff = ext.groups[j].minus(direct.groups[j]);
            for (const auto& [k, v] : diff.coeffs) worst = std::max(worst, std::abs(v));
        }
    }
    return {tolerance_report("cyclic.vandermonde-extract", worst, 1e-8,
                             "system solve recovers the direct partition")};
}

inline std::vector<CheckReport> check_dk_matrix(std::uint64_t, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders;
    if (k) orders.push_back(*k);
    else for (int o = 3; o <= 12; ++o) orders.push_back(o);
    for (int order : orders) {
        auto d = cyclic::dk_matrix(order);
        const int m = 2 * order;
        double det = linalg::det_magnitude(d, m);
        double unit = 0.0;
        for (int row = 0; row < m; ++row) {
            double acc = 0.0;
            for (int col = 0; col < m; ++col) acc += d[row * m + col] / m;
            unit = std::max(unit, std::abs(acc - (row == 0 ? 1.0 : 0.0)));
        }
        CheckReport r;
        r.check = "cyclic.dk-matrix(K=" + std::to_string(order) + ")";
        r.lhs = det;
        r.rhs = 1e-10;
        r.constant_tag = "|det| > 1e-10 and D * uniform = e1";
        r.pass = det > 1e-10 && unit <= 1e-12;
        out.push_back(r);
    }
    return out;
}

inline std::vector<CheckReport> check_epsilon_star(std::uint64_t, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders = k ? std::vector<int>{*k} : std::vector<int>{3, 5, 7};
    for (int order : orders) {
        double eps = cyclic::epsilon_star(order);
        CheckReport r;
        r.check = "cyclic.epsilon-star(K=" + std::to_string(order) + ")";
        r.lhs = eps;
        r.rhs = 1.0 / std::pow(2.0 * order, 2);
        r.constant_tag = "0 < eps_* <= 1/(2K)^2";
        r.pass = eps > 0.0 && eps <= r.rhs + 1e-15;
        out.push_back(r);
    }
    return out;
}

inline std::vector<CheckReport> check_measure(std::uint64_t seed, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders = k ? std::vector<int>{*k} : std::vector<int>{3, 5, 7};
    for (int order : orders) {
        double eps = cyclic::epsilon_star(order);
        Rng rng(derive_seed(seed, 1100 + order));
        double worst = 0.0;
        bool pass = true;
        for (int rep = 0; rep < 100; ++rep) {
            Complex z = std::polar(rng.real(0.0, eps), rng.real(0.0, 2.0 * kPi));
            try {
                auto sol = cyclic::measure_for_point(order, z);
                double sum = 0.0;
                for (double w : sol.weights) sum += w;
                worst = std::max(worst, std::abs(sum - 1.0));
                for (int p = 0; p < order; ++p) {
                    Complex acc{0, 0};
                    for (int q = 0; q < 2 * order; ++q)
                        acc += sol.weights[q] *
                               cyclic::root_of_unity(2 * order, static_cast<std::int64_t>(q) * p);
                    worst = std::max(worst, std::abs(acc - std::pow(z, p)));
                }
            } catch (const std::exception&) {
                pass = false;
            }
        }
        auto r = tolerance_report("cyclic.measure(K=" + std::to_string(order) + ")", worst, 1e-10,
                                  "weights sum to 1 and match all moments");
        r.pass = r.pass && pass;
        out.push_back(r);
    }
    return out;
}

inline std::vector<CheckReport> check_half_root(std::uint64_t, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders;
    if (k) orders.push_back(*k);
    else for (int o = 3; o <= 12; ++o) orders.push_back(o);
    for (int order : orders) out.push_back(cyclic::half_root_identity_check(order));
    return out;
}

inline std::vector<CheckReport> check_property_b(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    double worst = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(3, 4, 3, 6, derive_seed(seed, 1200 + rep));
        for (const auto& [supp, part] : cyclic::support_split(f))
            for (const auto& g : cyclic::inseparable_partition(part).groups) {
                auto r = cyclic::property_b_check(g);
                if (!r.pass) pass = false;
                if (r.rhs > 0.0) worst = std::max(worst, r.lhs / r.rhs);
            }
    }
    auto r = tolerance_report("cyclic.property-b", worst, 1.0 + 1e-9,
                              "|g(sqrt(omega) 1)| <= ||g||");
    r.pass = r.pass && pass;
    return {r};
}

inline std::vector<CheckReport> check_torus_vs_2k(std::uint64_t seed, std::optional<int>) {
    std::vector<CheckReport> out;
    bool pass = true;
    for (int rep = 0; rep < 10; ++rep) {
        int n = 2 + rep % 3;
        auto f = cyclic::random_cyclic_polynomial(3, n, 2, 4, derive_seed(seed, 1300 + rep));
        auto r = cyclic::torus_vs_2k_check(f, 24);
        auto dil = cyclic::torus_dilation_check(f, 24);
        if (!r.pass || !dil.pass) pass = false;
    }
    CheckReport agg;
    agg.check = "cyclic.torus-vs-omega2k";
    agg.constant_tag = "(d+1)*eps_star^-d";
    agg.pass = pass;
    agg.details = "10 instances, K=3, M in {24,48}";
    out.push_back(agg);
    return out;
}

inline std::vector<CheckReport> check_remez_chain(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    for (int rep = 0; rep < 6; ++rep) {
        int n = 2 + rep % 2;
        auto f = cyclic::random_cyclic_polynomial(3, n, 2, 4, derive_seed(seed, 1400 + rep));
        auto rep_chain = cyclic::remez_chain_check(f, 12);
        if (!rep_chain.chain.pass || !rep_chain.single_point.pass) pass = false;
        for (const auto& g : rep_chain.groups)
            if (!g.pass) pass = false;
    }
    CheckReport r;
    r.check = "cyclic.remez-chain";
    r.constant_tag = "(d+1)*eps_star^-d * sum of extraction constants";
    r.pass = pass;
    r.details = "6 instances, K=3, M=12";
    return {r};
}

inline std::vector<CheckReport> check_pauli_anticommutation(std::uint64_t, std::optional<int>) {
    return {quantum::pauli_anticommutation_check()};
}

inline std::vector<CheckReport> check_hw_commutation(std::uint64_t, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders = k ? std::vector<int>{*k} : std::vector<int>{3, 5, 7};
    for (int order : orders) out.push_back(quantum::hw_commutation_check(order));
    return out;
}

inline std::vector<CheckReport> check_sigma_cover(std::uint64_t, std::optional<int> k) {
    std::vector<CheckReport> out;
    std::vector<int> orders = k ? std::vector<int>{*k} : std::vector<int>{3, 5, 7};
    for (int order : orders) out.push_back(quantum::sigma_cover_check(order));
    return out;
}

inline std::vector<CheckReport> check_eigensystem(std::uint64_t, std::optional<int> k) {
    std::vector<int> orders = k ? std::vector<int>{*k} : std::vector<int>{3, 5, 7};
    bool pass = true;
    std::string details;
    for (int order : orders) {
        try {
            for (int m = 0; m < order; ++m) quantum::hw_eigensystem(order, 1, m);
            quantum::hw_eigensystem(order, 0, 1);
        } catch (const std::exception& e) {
            pass = false;
            details = e.what();
        }
    }
    CheckReport r;
    r.check = "quantum.eigensystem";
    r.constant_tag = "eigenvalue sets match Omega_K for the generator words";
    r.pass = pass;
    r.details = details;
    return {r};
}

inline std::vector<CheckReport> check_orthogonality_lemma(std::uint64_t, std::optional<int>) {
    std::vector<CheckReport> out;
    out.push_back(quantum::orthogonality_lemma_check(quantum::pauli(1), quantum::pauli(3)));
    auto [x, z] = quantum::clock_shift(3);
    out.push_back(quantum::orthogonality_lemma_check(x, z));
    return out;
}

inline std::vector<CheckReport> check_qubit_reduction(std::uint64_t seed, std::optional<int>) {
    double worst = 0.0;
    bool pass = true;
    for (int rep = 0; rep < 20; ++rep) {
        int n = 2 + rep % 3;
        auto obs = random_hermitian_observable(n, 2, 5, derive_seed(seed, 1500 + rep));
        try {
            auto red = quantum::reduce_qubit(obs);  // self-checks both routes
            if (cube::degree(red.spectrum) != obs.degree()) pass = false;
            Rng rng(derive_seed(seed, 1600 + rep));
            for (int t = 0; t < 20; ++t) {
                std::uint64_t point = rng.u64();
                double via_trace = red.eval_trace(std::span<const std::uint64_t>(&point, 1));
                double via_spec = 0.0;
                for (const auto& [sub, c] : red.spectrum.coeffs) {
                    std::uint64_t w = point;
                    via_spec += sub.odd_on(std::span<const std::uint64_t>(&w, 1)) ? -c : c;
                }
                worst = std::max(worst, std::abs(via_trace - via_spec));
            }
        } catch (const std::exception&) {
            pass = false;
        }
    }
    auto r = tolerance_report("quantum.qubit-reduction", worst, 1e-10,
                              "trace route equals the 3^{-l} coefficient law");
    r.pass = r.pass && pass;
    return {r};
}

inline std::vector<CheckReport> check_qudit_reduction(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    for (int rep = 0; rep < 10; ++rep) {
        int n = 1 + rep % 2;
        auto obs = random_hw_observable(3, n, 2, 4, derive_seed(seed, 1700 + rep));
        try {
            quantum::reduce_qudit(obs);  // self-checks routes and norms
        } catch (const std::exception&) {
            pass = false;
        }
    }
    CheckReport r;
    r.check = "quantum.qudit-reduction";
    r.constant_tag = "trace route equals the (K+1)^{-kappa} coefficient law";
    r.pass = pass;
    r.details = "10 instances, K=3, n<=2";
    return {r};
}

inline std::vector<CheckReport> check_qubit_bh(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    for (int rep = 0; rep < 10; ++rep) {
        auto obs = random_hermitian_observable(3, 2, 6, derive_seed(seed, 1800 + rep));
        double bh = bh::bh_constant_upper(std::max(obs.degree(), 1)).value;
        if (!quantum::qubit_bh_check(obs, bh).pass) pass = false;
    }
    CheckReport r;
    r.check = "quantum.qubit-bh";
    r.constant_tag = "3^d * BH_boolean";
    r.pass = pass;
    return {r};
}

inline std::vector<CheckReport> check_qubit_chain(std::uint64_t seed, std::optional<int>) {
    bool pass = true;
    for (int rep = 0; rep < 5; ++rep) {
        auto obs = random_hermitian_observable(2, 2, 4, derive_seed(seed, 1900 + rep));
        double bh = bh::bh_constant_upper(std::max(obs.degree(), 1)).value;
        if (!quantum::qubit_chain_check(obs, bh).pass) pass = false;
    }
    CheckReport r;
    r.check = "quantum.qubit-chain";
    r.constant_tag = "coefficient norm vs exhaustive sup";
    r.pass = pass;
    return {r};
}

}  // namespace detail

struct RegistryEntry {
    std::string name;
    bool prime_only_k = false;  // a --K override must be prime for this check
    std::function<std::vector<CheckReport>(std::uint64_t, std::optional<int>)> run;
};

inline const std::vector<RegistryEntry>& check_registry() {
    static const std::vector<RegistryEntry> entries = {
        {"cube.parseval", false, detail::check_parseval},
        {"cube.transform-roundtrip", false, detail::check_roundtrip},
        {"cube.moment-comparison", false, detail::check_moment_comparison},
        {"cube.count-bound", false, detail::check_count_bound},
        {"learning.helper-inequality", false, detail::check_helper_inequality},
        {"learning.sample-size-crossover", false, detail::check_crossover},
        {"bh.blei", false, detail::check_blei},
        {"bh.littlewood", false, detail::check_littlewood},
        {"bh.polarization-bound", false, detail::check_polarization},
        {"bh.boolean-ratio", false, detail::check_boolean_ratio},
        {"cyclic.k3", false, detail::check_k3},
        {"cyclic.pseudo-projection-bound", false, detail::check_pseudo_projection},
        {"cyclic.dk-scaling", true, detail::check_dk_scaling},
        {"cyclic.splitting-bound", true, detail::check_splitting},
        {"cyclic.inseparable-count", false, detail::check_inseparable},
        {"cyclic.vandermonde-extract", false, detail::check_vandermonde},
        {"cyclic.dk-matrix", false, detail::check_dk_matrix},
        {"cyclic.epsilon-star", false, detail::check_epsilon_star},
        {"cyclic.measure", false, detail::check_measure},
        {"cyclic.half-root-identity", false, detail::check_half_root},
        {"cyclic.property-b", false, detail::check_property_b},
        {"cyclic.torus-vs-omega2k", false, detail::check_torus_vs_2k},
        {"cyclic.remez-chain", false, detail::check_remez_chain},
        {"quantum.pauli-anticommutation", false, detail::check_pauli_anticommutation},
        {"quantum.hw-commutation", true, detail::check_hw_commutation},
        {"quantum.sigma-cover", true, detail::check_sigma_cover},
        {"quantum.eigensystem", true, detail::check_eigensystem},
        {"quantum.orthogonality-lemma", false, detail::check_orthogonality_lemma},
        {"quantum.qubit-reduction", false, detail::check_qubit_reduction},
        {"quantum.qudit-reduction", false, detail::check_qudit_reduction},
        {"quantum.qubit-bh", false, detail::check_qubit_bh},
        {"quantum.qubit-chain", false, detail::check_qubit_chain},
    };
    return entries;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file: " + path);
    f << text;
}

inline std::vector<std::int64_t> parse_int_list(const std::string& csv) {
    std::vector<std::int64_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoll(item));
    }
    return out;
}

inline int cmd_learn(const std::string& algo, int n, const learning::LearnerConfig& cfg,
                     int trials, std::uint64_t seed, int threads, const std::string& out_path,
                     std::ostream& out) {
    learning::Algo a = (algo == "lmn") ? learning::Algo::lmn : learning::Algo::ei;
    auto records = learning::run_learning_trials(a, n, cfg, trials, seed, threads);
    auto summary = learning::summarize(records);
    std::ostringstream text;
    for (const auto& r : records) text << serialize::trial_to_json(r).dump() << "\n";
    text << nlohmann::json{{"success_rate", summary.success_rate},
                           {"mean_l2err", summary.mean_l2err},
                           {"N_used", summary.N_used}}
                .dump()
         << "\n";
    write_text(out_path, text.str(), out);
    return summary.success_rate >= 1.0 - cfg.delta - 0.05 ? 0 : 1;
}

inline int cmd_verify(const std::string& only, std::optional<int> k_override, std::uint64_t seed,
                      const std::string& out_path, std::ostream& out) {
    std::vector<CheckReport> reports;
    int selected = 0;
    for (const auto& entry : check_registry()) {
        if (!only.empty() && entry.name.find(only) == std::string::npos) continue;
        ++selected;
        if (k_override && entry.prime_only_k && !is_prime(*k_override))
            throw std::invalid_argument(entry.name + ": composite K " +
                                        std::to_string(*k_override) + " rejected");
        auto batch = entry.run(seed, k_override);
        reports.insert(reports.end(), batch.begin(), batch.end());
    }
    if (selected == 0) throw std::invalid_argument("verify: no check matches --only " + only);
    bool all_pass = true;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : reports) {
        checks.push_back(serialize::report_to_json(r));
        if (!r.pass) all_pass = false;
    }
    nlohmann::json report{{"seed", seed}, {"checks", checks}, {"all_pass", all_pass}};
    write_text(out_path, report.dump(2) + "\n", out);
    return all_pass ? 0 : 1;
}

inline int cmd_scan_sizes(const std::string& n_list, const learning::LearnerConfig& cfg,
                          const std::string& format, const std::string& out_path,
                          std::ostream& out) {
    auto ns = parse_int_list(n_list);
    if (ns.empty()) throw std::invalid_argument("scan: empty n list");
    std::ostringstream text;
    nlohmann::json rows = nlohmann::json::array();
    if (format == "csv") text << "n,N_lmn,N_ei\n";
    for (auto n : ns) {
        auto lmn = learning::lmn_sample_size(n, cfg);
        auto ei = learning::ei_sample_size(static_cast<double>(n), cfg);
        if (format == "csv")
            text << n << "," << lmn << "," << ei << "\n";
        else
            rows.push_back({{"n", n}, {"N_lmn", lmn}, {"N_ei", ei}});
    }
    if (format != "csv") text << rows.dump(2) << "\n";
    write_text(out_path, text.str(), out);
    auto witness = learning::sample_size_crossover(cfg, ns);
    out << "crossover_n0=" << (witness > 0 ? std::to_string(witness) : "none") << "\n";
    return 0;
}

inline int cmd_scan_bh(int d, int n, int instances, std::uint64_t seed, const std::string& format,
                       const std::string& out_path, std::ostream& out) {
    if (instances < 1) throw std::invalid_argument("scan: instances >= 1");
    double max_ratio = 0.0;
    for (int rep = 0; rep < instances; ++rep) {
        auto f = cube::random_low_degree_boolean(n, d, derive_seed(seed, rep));
        auto s = cube::walsh_transform(f);
        if (cube::degree(s) == 0) continue;
        max_ratio = std::max(max_ratio, bh::bh_ratio(s));
    }
    const double upper = std::pow(2.0, (d - 1.0) / d);
    std::ostringstream text;
    if (format == "csv") {
        text << "d,n,instances,max_ratio,upper_bound\n";
        text << d << "," << n << "," << instances << "," << nlohmann::json(max_ratio).dump() << ","
             << nlohmann::json(upper).dump() << "\n";
    } else {
        text << nlohmann::json{{"d", d},
                               {"n", n},
                               {"instances", instances},
                               {"max_ratio", max_ratio},
                               {"upper_bound", upper}}
                    .dump(2)
             << "\n";
    }
    write_text(out_path, text.str(), out);
    return max_ratio <= upper + 1e-9 ? 0 : 1;
}

inline int cmd_cyclic_remez(int order, int n, int d, int grid_m, int instances,
                            std::uint64_t seed, const std::string& out_path, std::ostream& out) {
    if (!is_prime(order)) throw std::invalid_argument("cyclic-remez: prime K only");
    nlohmann::json checks = nlohmann::json::array();
    bool all_pass = true;
    for (int rep = 0; rep < instances; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(order, n, d, 4, derive_seed(seed, rep));
        auto chain = cyclic::remez_chain_check(f, grid_m);
        checks.push_back(serialize::report_to_json(chain.chain));
        checks.push_back(serialize::report_to_json(chain.single_point));
        auto torus = cyclic::torus_vs_2k_check(f, grid_m);
        checks.push_back(serialize::report_to_json(torus));
        if (!chain.chain.pass || !chain.single_point.pass || !torus.pass) all_pass = false;
    }
    nlohmann::json report{{"seed", seed}, {"K", order}, {"checks", checks}, {"all_pass", all_pass}};
    write_text(out_path, report.dump(2) + "\n", out);
    return all_pass ? 0 : 1;
}

inline int cmd_cyclic_split(int order, int n, int d, int instances, std::uint64_t seed,
                            const std::string& out_path, std::ostream& out) {
    if (!is_prime(order)) throw std::invalid_argument("cyclic-split: prime K only");
    nlohmann::json checks = nlohmann::json::array();
    bool all_pass = true;
    for (int rep = 0; rep < instances; ++rep) {
        auto f = cyclic::random_cyclic_polynomial(order, n, d, 5, derive_seed(seed, rep));
        auto split = cyclic::splitting_bound_check(f);
        checks.push_back(serialize::report_to_json(split));
        auto proj = cyclic::pseudo_projection_bound_check(f);
        checks.push_back(serialize::report_to_json(proj));
        if (!split.pass || !proj.pass) all_pass = false;
    }
    nlohmann::json report{{"seed", seed}, {"K", order}, {"checks", checks}, {"all_pass", all_pass}};
    write_text(out_path, report.dump(2) + "\n", out);
    return all_pass ? 0 : 1;
}

inline int cmd_qudit_reduce(int order, int n, int d, int instances, std::uint64_t seed,
                            const std::string& out_path, std::ostream& out) {
    if (!is_prime(order)) throw std::invalid_argument("qudit-reduce: prime K only");
    nlohmann::json checks = nlohmann::json::array();
    nlohmann::json observables = nlohmann::json::array();
    bool all_pass = true;
    for (int rep = 0; rep < instances; ++rep) {
        auto obs = detail::random_hw_observable(order, n, d, 4, derive_seed(seed, rep));
        CheckReport r;
        r.check = "qudit-reduce(instance=" + std::to_string(rep) + ")";
        r.constant_tag = "trace route equals the (K+1)^{-kappa} coefficient law";
        try {
            auto red = quantum::reduce_qudit(obs);
            r.lhs = static_cast<double>(red.poly.coeffs.size());
            r.pass = true;
        } catch (const std::exception& e) {
            r.pass = false;
            r.details = e.what();
            all_pass = false;
        }
        checks.push_back(serialize::report_to_json(r));
        if (rep == 0) observables.push_back(serialize::hw_to_json(obs));
    }
    nlohmann::json report{{"seed", seed},
                          {"K", order},
                          {"observables", observables},
                          {"checks", checks},
                          {"all_pass", all_pass}};
    write_text(out_path, report.dump(2) + "\n", out);
    return all_pass ? 0 : 1;
}

}  // namespace detail

// Exit codes: 0 pass, 1 check failure, 2 usage error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"exact Fourier analysis workbench for low-degree functions"};
    app.require_subcommand(1);

    int threads = 1;
    app.add_option("--threads", threads, "worker threads for trial fan-out")->check(CLI::Range(1, 64));

    // learn
    auto* learn = app.add_subcommand("learn", "run seeded query-learning trials");
    std::string algo = "ei";
    int l_n = 64, l_d = 1, l_trials = 0;
    double l_eps = 0.1, l_delta = 0.1, l_bh = 0.0;
    std::uint64_t l_seed = 0;
    std::string l_out;
    learn->add_option("--algo", algo)->check(CLI::IsMember({"lmn", "ei"}));
    learn->add_option("--n", l_n)->required()->check(CLI::Range(1, 1000000));
    learn->add_option("--d", l_d)->required()->check(CLI::Range(1, 20));
    learn->add_option("--epsilon", l_eps)->required();
    learn->add_option("--delta", l_delta)->required();
    learn->add_option("--bh", l_bh, "BH constant; defaults to 2^{(d-1)/d}");
    learn->add_option("--trials", l_trials)->required()->check(CLI::Range(1, 1000000));
    learn->add_option("--seed", l_seed)->required();
    learn->add_option("--out", l_out);

    // verify
    auto* verify = app.add_subcommand("verify", "run the full invariant suite");
    std::string v_only;
    std::uint64_t v_seed = 12345;
    int v_k = 0;
    std::string v_out;
    verify->add_option("--only", v_only, "substring filter on check names");
    verify->add_option("--K", v_k, "cycle order override for K-parameterized checks");
    verify->add_option("--seed", v_seed);
    verify->add_option("--out", v_out);

    // scan
    auto* scan = app.add_subcommand("scan", "parameter sweeps");
    std::string s_what;
    std::string s_nlist;
    int s_d = 2, s_n = 10, s_instances = 1000;
    double s_eps = 0.1, s_delta = 0.1, s_bh = 0.0;
    std::uint64_t s_seed = 12345;
    std::string s_out, s_format = "csv";
    scan->add_option("--what", s_what)->required()->check(CLI::IsMember({"n-scaling", "bh-ratio"}));
    scan->add_option("--n", s_nlist, "comma-separated n list (n-scaling) or single n (bh-ratio)");
    scan->add_option("--d", s_d)->check(CLI::Range(1, 20));
    scan->add_option("--epsilon", s_eps);
    scan->add_option("--delta", s_delta);
    scan->add_option("--bh", s_bh);
    scan->add_option("--instances", s_instances)->check(CLI::Range(1, 10000000));
    scan->add_option("--seed", s_seed);
    scan->add_option("--format", s_format)->check(CLI::IsMember({"csv", "json"}));
    scan->add_option("--out", s_out);

    // bh-scan (same engine as scan --what bh-ratio)
    auto* bh_scan = app.add_subcommand("bh-scan", "max BH ratio over random instances");
    int b_d = 2, b_n = 10, b_instances = 1000;
    std::uint64_t b_seed = 12345;
    std::string b_out, b_format = "csv";
    bh_scan->add_option("--d", b_d)->required()->check(CLI::Range(1, 20));
    bh_scan->add_option("--n", b_n)->check(CLI::Range(1, 20));
    bh_scan->add_option("--instances", b_instances)->check(CLI::Range(1, 10000000));
    bh_scan->add_option("--seed", b_seed);
    bh_scan->add_option("--format", b_format)->check(CLI::IsMember({"csv", "json"}));
    bh_scan->add_option("--out", b_out);

    // cyclic-remez
    auto* remez = app.add_subcommand("cyclic-remez", "torus-versus-grid comparison reports");
    int r_k = 3, r_n = 2, r_d = 2, r_m = 12, r_instances = 5;
    std::uint64_t r_seed = 12345;
    std::string r_out;
    remez->add_option("--K", r_k)->check(CLI::Range(3, 13));
    remez->add_option("--n", r_n)->check(CLI::Range(1, 6));
    remez->add_option("--d", r_d)->check(CLI::Range(1, 6));
    remez->add_option("--M", r_m);
    remez->add_option("--instances", r_instances)->check(CLI::Range(1, 1000));
    remez->add_option("--seed", r_seed);
    remez->add_option("--out", r_out);

    // cyclic-split
    auto* split = app.add_subcommand("cyclic-split", "support-splitting bound reports");
    int c_k = 3, c_n = 3, c_d = 3, c_instances = 10;
    std::uint64_t c_seed = 12345;
    std::string c_out;
    split->add_option("--K", c_k)->check(CLI::Range(3, 13));
    split->add_option("--n", c_n)->check(CLI::Range(1, 6));
    split->add_option("--d", c_d)->check(CLI::Range(1, 6));
    split->add_option("--instances", c_instances)->check(CLI::Range(1, 1000));
    split->add_option("--seed", c_seed);
    split->add_option("--out", c_out);

    // qudit-reduce
    auto* qudit = app.add_subcommand("qudit-reduce", "qudit-to-cyclic reduction reports");
    int q_k = 3, q_n = 2, q_d = 2, q_instances = 5;
    std::uint64_t q_seed = 12345;
    std::string q_out;
    qudit->add_option("--K", q_k)->check(CLI::Range(3, 7));
    qudit->add_option("--n", q_n)->check(CLI::Range(1, 3));
    qudit->add_option("--d", q_d)->check(CLI::Range(1, 6));
    qudit->add_option("--instances", q_instances)->check(CLI::Range(1, 1000));
    qudit->add_option("--seed", q_seed);
    qudit->add_option("--out", q_out);

    std::vector<const char*> argv;
    argv.push_back("bhlab");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (learn->parsed()) {
            learning::LearnerConfig cfg{l_d, l_eps, l_delta,
                                        l_bh > 0.0 ? l_bh : std::pow(2.0, (l_d - 1.0) / l_d)};
            cfg.validate();
            return detail::cmd_learn(algo, l_n, cfg, l_trials, l_seed, threads, l_out, out);
        }
        if (verify->parsed()) {
            std::optional<int> k;
            if (v_k != 0) k = v_k;
            return detail::cmd_verify(v_only, k, v_seed, v_out, out);
        }
        if (scan->parsed()) {
            if (s_what == "n-scaling") {
                learning::LearnerConfig cfg{s_d, s_eps, s_delta,
                                            s_bh > 0.0 ? s_bh : std::pow(2.0, (s_d - 1.0) / s_d)};
                cfg.validate();
                return detail::cmd_scan_sizes(s_nlist, cfg, s_format, s_out, out);
            }
            int n = s_nlist.empty() ? 10 : static_cast<int>(detail::parse_int_list(s_nlist).at(0));
            return detail::cmd_scan_bh(s_d, n, s_instances, s_seed, s_format, s_out, out);
        }
        if (bh_scan->parsed())
            return detail::cmd_scan_bh(b_d, b_n, b_instances, b_seed, b_format, b_out, out);
        if (remez->parsed())
            return detail::cmd_cyclic_remez(r_k, r_n, r_d, r_m, r_instances, r_seed, r_out, out);
        if (split->parsed())
            return detail::cmd_cyclic_split(c_k, c_n, c_d, c_instances, c_seed, c_out, out);
        if (qudit->parsed())
            return detail::cmd_qudit_reduce(q_k, q_n, q_d, q_instances, q_seed, q_out, out);
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceLimitError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::overflow_error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "check failure: " << e.what() << "\n";
        return 1;
    }
    err << "usage error: no subcommand\n";
    return 2;
}

}  // namespace bhlab::cli

#endif  // BHLAB_CLI_HPP
