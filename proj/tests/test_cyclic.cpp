#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdint>

#include "bhlab/cyclic.hpp"

using namespace bhlab;
using namespace bhlab::cyclic;

namespace {

CyclicPolynomial from_terms(int order, int n,
                            std::initializer_list<std::pair<std::vector<std::uint8_t>, Complex>> ts) {
    CyclicPolynomial f(order, n);
    for (const auto& [alpha, c] : ts) f.add_term(alpha, c);
    f.sort_and_compact();
    return f;
}

CyclicPolynomial random_cyclic(int order, int n, int max_deg, int terms, std::uint64_t seed) {
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

}  // namespace

TEST_CASE("evaluation of monomials and constants") {
    auto z1 = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}});
    Complex omega = root_of_unity(3, 1);
    std::vector<Complex> at{omega, Complex{1, 0}};
    CHECK(std::abs(eval_cyclic(z1, at) - omega) < 1e-15);

    auto c = from_terms(5, 3, {{{0, 0, 0}, Complex{0.25, -0.5}}});
    std::vector<Complex> any{omega, omega, omega};
    CHECK(std::abs(eval_cyclic(c, any) - Complex{0.25, -0.5}) < 1e-15);

    auto f = random_cyclic(3, 4, 4, 6, 99);
    Complex sum{0, 0};
    for (const auto& [k, v] : f.coeffs) sum += v;
    std::vector<Complex> ones(4, Complex{1, 0});
    CHECK(std::abs(eval_cyclic(f, ones) - sum) < 1e-12);
}

TEST_CASE("sup norm over the cyclic grid") {
    auto z1 = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}});
    CHECK_THAT(sup_norm_cyclic(z1), Catch::Matchers::WithinAbs(1.0, 1e-13));

    auto one_plus = from_terms(3, 1, {{{0}, Complex{1, 0}}, {{1}, Complex{1, 0}}});
    CHECK_THAT(sup_norm_cyclic(one_plus), Catch::Matchers::WithinAbs(2.0, 1e-13));
}

TEST_CASE("sup norm matches direct evaluation on random instances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto f = random_cyclic(3, 3, 4, 5, 500 + seed);
        double direct = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    std::vector<Complex> z{root_of_unity(3, a), root_of_unity(3, b),
                                           root_of_unity(3, c)};
                    direct = std::max(direct, std::abs(eval_cyclic(f, z)));
                }
        CHECK_THAT(sup_norm_cyclic(f), Catch::Matchers::WithinRel(direct, 1e-12));
    }
}

TEST_CASE("torus grid sup rules") {
    auto z1 = from_terms(3, 1, {{{1}, Complex{1, 0}}});
    for (int m : {6, 12, 24})
        CHECK_THAT(sup_norm_torus_grid(z1, m).value, Catch::Matchers::WithinAbs(1.0, 1e-13));
    CHECK_THROWS_AS(sup_norm_torus_grid(z1, 7), std::invalid_argument);
    CHECK_THROWS_AS(sup_norm_torus_grid(z1, 3), std::invalid_argument);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto f = random_cyclic(3, 2, 3, 5, 700 + seed);
        CHECK(sup_norm_torus_grid(f, 6).value <= sup_norm_torus_grid(f, 12).value * (1 + 1e-12));
        CHECK(sup_norm_torus_grid(f, 12).value <= sup_norm_torus_grid(f, 24).value * (1 + 1e-12));
        CHECK(sup_norm_torus_grid(f, 12).lower_bound_only);
    }
}

TEST_CASE("tau factors stay above the sine lower bound") {
    for (int order : {3, 5, 7}) {
        Rng rng(order);
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<std::uint8_t> alpha(6);
            int supp = 0;
            for (auto& d : alpha) {
                d = static_cast<std::uint8_t>(rng.below(order));
                supp += d != 0;
            }
            for (int xi = 1; xi < order; ++xi) {
                double tau = std::abs(tau_factor(order, alpha, xi));
                double lower = std::pow(2.0 * std::sin(kPi / order), supp);
                CHECK(tau >= lower * (1.0 - 1e-12));
            }
        }
    }
}

TEST_CASE("pseudo projection of a single variable") {
    auto f = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}});
    auto proj = pseudo_projection(f, 1);
    REQUIRE(proj.terms.size() == 1);
    auto [alpha, mask, c] = proj.terms[0];
    CHECK(mask == 0b01);
    Complex expect = Complex{1, 0} - root_of_unity(3, 1);
    CHECK(std::abs(c - expect) < 1e-14);
    CHECK_THROWS_AS(pseudo_projection(f, 0), std::invalid_argument);
    CHECK_THROWS_AS(pseudo_projection(f, 3), std::invalid_argument);
}

TEST_CASE("pseudo projection of a constant is the identity") {
    auto f = from_terms(3, 2, {{{0, 0}, Complex{0.5, 0.25}}});
    auto proj = pseudo_projection(f, 1);
    REQUIRE(proj.terms.size() == 1);
    CHECK(std::get<1>(proj.terms[0]) == 0);
    CHECK(std::abs(std::get<2>(proj.terms[0]) - Complex{0.5, 0.25}) < 1e-15);
}

TEST_CASE("pseudo projection bound holds by exact enumeration") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        int n = 2 + static_cast<int>(seed % 5);  // up to 6
        auto f = random_cyclic(3, n, 3, 5, 1000 + seed);
        auto rep = pseudo_projection_bound_check(f);
        CHECK(rep.pass);
    }
    // Single variable: ||Df|| = |1 - omega^2| at xi = omega^2 stays under the bound.
    auto f = from_terms(3, 1, {{{1}, Complex{1, 0}}});
    auto rep = pseudo_projection_bound_check(f);
    CHECK(rep.pass);
    CHECK_THAT(rep.lhs,
               Catch::Matchers::WithinAbs(std::abs(Complex{1, 0} - root_of_unity(3, 2)), 1e-12));
}

TEST_CASE("iterated pseudo projections accumulate the dK scaling") {
    // Support-homogeneous input: after applying all xi = omega..omega^{K-1},
    // every coefficient is scaled by exactly d_K^ell.
    for (int order : {3, 5}) {
        CyclicPolynomial f(order, 4);
        std::vector<std::uint8_t> a1(4, 0), a2(4, 0);
        a1[0] = 1;
        a1[2] = static_cast<std::uint8_t>(order - 1);
        a2[1] = 2;
        a2[3] = 1;
        f.add_term(a1, Complex{0.7, -0.2});
        f.add_term(a2, Complex{-0.3, 0.4});
        f.sort_and_compact();
        const int ell = f.max_support_size();
        REQUIRE(ell == 2);

        CyclicPolynomial cur = f;
        for (int xi = 1; xi < order; ++xi) cur = pseudo_projection_restricted(cur, xi);
        Complex scale = std::pow(dK_constant(order), ell);
        REQUIRE(cur.coeffs.size() == f.coeffs.size());
        for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
            CHECK(cur.coeffs[i].first == f.coeffs[i].first);
            CHECK(std::abs(cur.coeffs[i].second - scale * f.coeffs[i].second) < 1e-10);
        }
    }
}

TEST_CASE("support split partitions and re-sums exactly") {
    auto f = from_terms(3, 2, {{{0, 0}, Complex{1, 0}},
                               {{1, 0}, Complex{2, 0}},
                               {{1, 1}, Complex{3, 0}}});
    auto parts = support_split(f);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].first == 0);
    CHECK(parts[1].first == 1);
    CHECK(parts[2].first == 2);

    CyclicPolynomial sum(3, 2);
    for (const auto& [supp, poly] : parts) sum += poly;
    CHECK(sum.minus(f).coeffs.empty());

    auto homog = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}, {{0, 2}, Complex{1, 0}}});
    CHECK(support_split(homog).size() == 1);
}

TEST_CASE("inseparable grouping joins equal tau values across exponent patterns") {
    // K=3: one squared and seven linear variables share the tau value of
    // seven squared and one linear, since (1-omega)^6 = (1-omega^2)^6.
    std::vector<std::uint8_t> beta{2, 1, 1, 1, 1, 1, 1, 1};
    std::vector<std::uint8_t> beta_prime{2, 2, 2, 2, 2, 2, 2, 1};
    CyclicPolynomial f(3, 8);
    f.add_term(beta, Complex{1.0, 0.0});
    f.add_term(beta_prime, Complex{2.0, 0.0});
    f.sort_and_compact();
    auto part = inseparable_partition(f);
    CHECK(part.ell == 8);
    CHECK(part.groups.size() == 1);
    CHECK(std::abs(tau_factor(3, beta, 1) - tau_factor(3, beta_prime, 1)) < 1e-12);
}

TEST_CASE("inseparable grouping rejects mixed support sizes") {
    auto f = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}, {{1, 1}, Complex{1, 0}}});
    CHECK_THROWS_AS(inseparable_partition(f), std::invalid_argument);
}

TEST_CASE("group counts stay under the composition bound") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto f = random_cyclic(3, 5, 4, 8, 4000 + seed);
        for (const auto& [supp, part] : support_split(f)) {
            auto groups = inseparable_partition(part);
            int d = part.degree();
            CHECK(static_cast<double>(groups.groups.size()) <=
                  std::pow(static_cast<double>(3 + d), std::max(d, 1)));
        }
    }
}

TEST_CASE("vandermonde extraction recovers the inseparable groups") {
    // Two groups: z1 (tau = 1-omega) and z1^2 (tau = 1-omega^2).
    auto f = from_terms(3, 2, {{{1, 0}, Complex{0.8, 0.1}}, {{2, 0}, Complex{-0.4, 0.6}}});
    auto ext = vandermonde_extract(f, 1);
    auto direct = inseparable_partition(f);
    REQUIRE(ext.groups.size() == direct.groups.size());
    for (std::size_t j = 0; j < ext.groups.size(); ++j) {
        auto diff = ext.groups[j].minus(direct.groups[j]);
        double worst = 0.0;
        for (const auto& [k, v] : diff.coeffs) worst = std::max(worst, std::abs(v));
        CHECK(worst < 1e-8);
    }

    // Single group: extraction is the identity on the top part.
    auto g = from_terms(3, 3, {{{1, 1, 0}, Complex{1, 0}}, {{0, 1, 1}, Complex{2, 0}}});
    auto ext1 = vandermonde_extract(g, 2);
    REQUIRE(ext1.groups.size() == 1);
    CHECK(ext1.groups[0].minus(g).coeffs.empty());

    CHECK_THROWS_AS(vandermonde_extract(f, 2), std::invalid_argument);
}

TEST_CASE("vandermonde extraction on random instances with norm bounds") {
    const double boost = 2.0 + 2.0 * std::sqrt(2.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto f = random_cyclic(3, 4, 4, 6, 6000 + seed);
        const int ell = f.max_support_size();
        auto ext = vandermonde_extract(f, ell);
        CyclicPolynomial top(3, 4);
        for (const auto& [key, a] : f.coeffs) {
            auto digits = unpack_index(key, 3, 4);
            int supp = 0;
            for (auto d : digits) supp += d != 0;
            if (supp == ell) top.coeffs.emplace_back(key, a);
        }
        top.sort_and_compact();
        auto direct = inseparable_partition(top);
        REQUIRE(ext.groups.size() == direct.groups.size());
        const int big_j = static_cast<int>(ext.groups.size());
        const int d = f.degree();
        const double fnorm = sup_norm_cyclic(f);
        for (int j = 0; j < big_j; ++j) {
            auto diff = ext.groups[j].minus(direct.groups[j]);
            double worst = 0.0;
            for (const auto& [k, v] : diff.coeffs) worst = std::max(worst, std::abs(v));
            CHECK(worst < 1e-8);
            CHECK(sup_norm_cyclic(ext.groups[j]) <=
                  ext.eta_l1[j] * std::pow(boost, big_j * d) * fnorm * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("dk constant equals K for small primes") {
    CHECK(std::abs(dK_constant(3) - Complex{3, 0}) < 1e-12);
    CHECK(std::abs(dK_constant(5) - Complex{5, 0}) < 1e-12);
    CHECK(std::abs(dK_constant(7) - Complex{7, 0}) < 1e-11);
    CHECK_THROWS_AS(dK_constant(4), std::invalid_argument);
    CHECK_THROWS_AS(dK_constant(9), std::invalid_argument);
}

TEST_CASE("splitting bound holds and parts can exceed the whole") {
    bool found_part_above_whole = false;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto f = random_cyclic(3, 3, 3, 5, 8000 + seed);
        auto rep = splitting_bound_check(f);
        CHECK(rep.pass);
        double fnorm = sup_norm_cyclic(f);
        for (const auto& [supp, part] : support_split(f))
            if (sup_norm_cyclic(part) > fnorm * (1.0 + 1e-9)) found_part_above_whole = true;
    }
    CHECK(found_part_above_whole);
}

TEST_CASE("moment matrix shape and uniform solution") {
    for (int order : {3, 5, 7}) {
        auto d = dk_matrix(order);
        const int m = 2 * order;
        for (int col = 0; col < m; ++col) CHECK(d[col] == 1.0);
        // Uniform weights hit (1, 0, ..., 0).
        for (int row = 0; row < m; ++row) {
            double acc = 0.0;
            for (int col = 0; col < m; ++col) acc += d[row * m + col] / m;
            CHECK_THAT(acc, Catch::Matchers::WithinAbs(row == 0 ? 1.0 : 0.0, 1e-12));
        }
    }
    for (int order = 3; order <= 12; ++order) {
        auto d = dk_matrix(order);
        CHECK(linalg::det_magnitude(d, 2 * order) > 1e-10);
    }
}

TEST_CASE("epsilon star against the sign-vector oracle") {
    for (int order : {3, 4, 5}) {
        const int m = 2 * order;
        auto d = dk_matrix(order);
        // ||D^{-1}||_inf = max over sign vectors s of ||D^{-1} s||_inf.
        double oracle = 0.0;
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
            std::vector<double> s(m);
            for (int i = 0; i < m; ++i) s[i] = (bits >> i) & 1 ? 1.0 : -1.0;
            auto x = linalg::solve(d, s, m);
            for (double v : x) oracle = std::max(oracle, std::abs(v));
        }
        double eps = epsilon_star(order);
        double expect = std::min(1.0 / (2.0 * order * oracle), 1.0 / std::pow(2.0 * order, 2));
        CHECK_THAT(eps, Catch::Matchers::WithinRel(expect, 1e-10));
        CHECK(eps > 0.0);
        CHECK(eps <= 1.0 / std::pow(2.0 * order, 2) + 1e-15);
    }
}

TEST_CASE("measure construction at the origin and inside the radius") {
    for (int order : {3, 5, 7}) {
        auto uniform = measure_for_point(order, Complex{0, 0});
        for (double w : uniform.weights)
            CHECK_THAT(w, Catch::Matchers::WithinAbs(1.0 / (2.0 * order), 1e-12));

        double eps = epsilon_star(order);
        double dinv_norm = 1.0 / (2.0 * order * eps);
        Rng rng(order);
        for (int rep = 0; rep < 25; ++rep) {
            Complex z = std::polar(eps * 0.5, rng.real(0.0, 2.0 * kPi));
            auto sol = measure_for_point(order, z);
            double sum = 0.0;
            for (double w : sol.weights) {
                CHECK(w >= 0.0);
                CHECK(std::abs(w - 1.0 / (2.0 * order)) <= dinv_norm * std::abs(z) + 1e-9);
                sum += w;
            }
            CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
            for (int p = 0; p < order; ++p) {
                Complex acc{0, 0};
                for (int k = 0; k < 2 * order; ++k)
                    acc += sol.weights[k] * root_of_unity(2 * order, static_cast<std::int64_t>(k) * p);
                CHECK(std::abs(acc - std::pow(z, p)) < 1e-10);
            }
        }
        CHECK_THROWS_AS(measure_for_point(order, Complex{2.0 * eps, 0}), std::domain_error);
    }
}

TEST_CASE("torus against omega-2k comparison") {
    auto c = from_terms(3, 2, {{{0, 0}, Complex{0.7, 0.1}}});
    auto trivial = torus_vs_2k_check(c, 6);
    CHECK(trivial.pass);
    CHECK_THAT(trivial.lhs, Catch::Matchers::WithinRel(trivial.rhs, 1e-12));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        int n = 2 + static_cast<int>(seed % 3);
        auto f = random_cyclic(3, n, 2, 4, 9000 + seed);
        auto rep = torus_vs_2k_check(f, 24);
        CHECK(rep.pass);
        auto dil = torus_dilation_check(f, 24);
        CHECK(dil.pass);
    }
}

TEST_CASE("half root identity across cycle orders") {
    for (int order = 3; order <= 12; ++order) CHECK(half_root_identity_check(order).pass);
    // K=4, k=2: i(1-(-1))/2 = i equals (sqrt(omega))^2 = e^{i pi/2}.
    Complex lhs = std::polar(1.0, kPi * 2 / 4);
    CHECK(std::abs(lhs - Complex{0, 1}) < 1e-15);
}

TEST_CASE("property b on inseparable groups") {
    auto single = from_terms(3, 2, {{{1, 2}, Complex{0.4, -0.3}}});
    CHECK(property_b_check(single).pass);

    std::vector<std::uint8_t> beta{2, 1, 1, 1, 1, 1, 1, 1};
    std::vector<std::uint8_t> beta_prime{2, 2, 2, 2, 2, 2, 2, 1};
    CyclicPolynomial pair(3, 8);
    pair.add_term(beta, Complex{1.0, 0.0});
    pair.add_term(beta_prime, Complex{2.0, 0.0});
    pair.sort_and_compact();
    // Both monomials evaluate identically at (sqrt(omega), ..., sqrt(omega)).
    int total_beta = 0, total_beta_prime = 0;
    for (auto d : beta) total_beta += d;
    for (auto d : beta_prime) total_beta_prime += d;
    CHECK(std::abs(root_of_unity(6, total_beta) - root_of_unity(6, total_beta_prime)) < 1e-12);
    CHECK(property_b_check(pair).pass);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto f = random_cyclic(3, 4, 3, 6, 11000 + seed);
        for (const auto& [supp, part] : support_split(f))
            for (const auto& g : inseparable_partition(part).groups)
                CHECK(property_b_check(g).pass);
    }

    auto mixed = from_terms(3, 2, {{{1, 0}, Complex{1, 0}}, {{2, 0}, Complex{1, 0}}});
    CHECK_THROWS_AS(property_b_check(mixed), std::invalid_argument);
}

TEST_CASE("k3 counterexample reproduces the interior blow-up") {
    auto ce = k3_counterexample();
    const double expect = (1.0 + 2.0 * std::sqrt(3.0)) / 4.0;
    CHECK_THAT(ce.value_at_z0, Catch::Matchers::WithinAbs(expect, 1e-9));
    CHECK_THAT(ce.omega3_sup, Catch::Matchers::WithinAbs(1.0, 1e-12));

    Complex omega = root_of_unity(3, 1);
    CHECK_THAT(std::abs(ce.z0 - Complex{1, 0}),
               Catch::Matchers::WithinAbs(std::sqrt(3.0) / 2.0, 1e-12));
    CHECK_THAT(std::abs(ce.z0 - omega), Catch::Matchers::WithinAbs(std::sqrt(3.0) / 2.0, 1e-12));
    CHECK_THAT(std::abs(ce.z0 - root_of_unity(3, 2)), Catch::Matchers::WithinAbs(1.5, 1e-12));

    // The analytic extension exceeds the cyclic sup already on the 12-point
    // torus grid (max modulus pushes the interior value to the boundary).
    CHECK(sup_norm_torus_grid(ce.p, 12).value > 1.0);
}

TEST_CASE("remez chain assembles dimension-free constants") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        int n = 2 + static_cast<int>(seed % 3);  // up to 4
        auto f = random_cyclic(3, n, 2, 4, 12000 + seed);
        auto rep = remez_chain_check(f, 12);
        CHECK(rep.chain.pass);
        CHECK(rep.single_point.pass);
        for (const auto& g : rep.groups) CHECK(g.pass);
        CHECK(rep.c1 >= 1.0);
        CHECK(rep.c2 > 0.0);
    }
}
