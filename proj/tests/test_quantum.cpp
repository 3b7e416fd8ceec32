#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "bhlab/bh_core.hpp"
#include "bhlab/quantum.hpp"

using namespace bhlab;
using namespace bhlab::quantum;

namespace {

Matrix random_matrix(int dim, std::uint64_t seed, bool hermitian) {
    Rng rng(splitmix64(seed));
    Matrix m(dim);
    for (auto& v : m.a) v = Complex{rng.real(-1.0, 1.0), rng.real(-1.0, 1.0)};
    if (hermitian) {
        Matrix adj = adjoint(m);
        for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = (m.a[i] + adj.a[i]) * 0.5;
    }
    return m;
}

// Random hermitian observable of degree <= d: real coefficients on words of
// low support.
PauliObservable random_hermitian_observable(int n, int d, int terms, std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    PauliObservable obs;
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

HWObservable random_hw_observable(int order, int n, int d, int terms, std::uint64_t seed) {
    Rng rng(splitmix64(seed));
    HWObservable obs;
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

double min_eigenvalue_2x2(const Matrix& m) {
    double a = m.at(0, 0).real(), c = m.at(1, 1).real();
    double off = std::abs(m.at(0, 1));
    return (a + c) / 2.0 - std::sqrt((a - c) * (a - c) / 4.0 + off * off);
}

double svd_norm_oracle(const Matrix& m) {
    Eigen::MatrixXcd a(m.dim, m.dim);
    for (int r = 0; r < m.dim; ++r)
        for (int c = 0; c < m.dim; ++c) a(r, c) = m.at(r, c);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("pauli expansion of basis words and identity") {
    auto a = kron(pauli(1), pauli(0));
    auto obs = pauli_expand(a, 2);
    REQUIRE(obs.coeffs.size() == 1);
    CHECK(obs.coeffs[0].first == 1);  // digit 1 at site 0, identity at site 1
    CHECK(std::abs(obs.coeffs[0].second - Complex{1, 0}) < 1e-14);

    auto eye = Matrix::identity(4);
    auto id_obs = pauli_expand(eye, 2);
    REQUIRE(id_obs.coeffs.size() == 1);
    CHECK(id_obs.coeffs[0].first == 0);

    CHECK_THROWS_AS(pauli_expand(Matrix::identity(8), 2), std::invalid_argument);
}

TEST_CASE("hermitian matrices expand to real coefficients and round trip") {
    for (int n : {1, 2, 3}) {
        auto a = random_matrix(1 << n, 100 + n, true);
        auto obs = pauli_expand(a, n);
        for (const auto& [w, c] : obs.coeffs) CHECK(std::abs(c.imag()) < 1e-12);
        auto back = pauli_synthesize(obs);
        CHECK(max_abs_diff(a, back) < 1e-12);
    }
    // Non-hermitian round trip as well.
    auto g = random_matrix(4, 55, false);
    CHECK(max_abs_diff(g, pauli_synthesize(pauli_expand(g, 2))) < 1e-12);
}

TEST_CASE("pauli words are orthogonal under the trace pairing") {
    for (int n : {1, 2}) {
        const std::uint64_t words = std::uint64_t{1} << (2 * n);
        for (std::uint64_t s = 0; s < words; ++s)
            for (std::uint64_t t = 0; t < words; ++t) {
                auto ws = pauli_word_matrix(n, s);
                auto wt = pauli_word_matrix(n, t);
                Complex tr = trace_product(adjoint(ws), wt);
                double expect = (s == t) ? std::pow(2.0, n) : 0.0;
                CHECK(std::abs(tr - Complex{expect, 0}) < 1e-12);
            }
    }
}

TEST_CASE("pauli anticommutation relations") {
    auto rep = pauli_anticommutation_check();
    CHECK(rep.pass);
    auto z = pauli(1) * pauli(2);
    auto w = pauli(2) * pauli(1);
    for (std::size_t i = 0; i < z.a.size(); ++i) CHECK(std::abs(z.a[i] + w.a[i]) < 1e-15);
}

TEST_CASE("clock and shift matrices") {
    auto [x2, z2] = clock_shift(2);
    CHECK(max_abs_diff(x2, pauli(1)) < 1e-15);
    CHECK(max_abs_diff(z2, pauli(3)) < 1e-15);

    auto [x, z] = clock_shift(3);
    auto zx = z * x;
    auto xz = x * z;
    for (auto& v : xz.a) v *= cyclic::root_of_unity(3, 1);
    CHECK(max_abs_diff(zx, xz) < 1e-12);  // ZX = omega XZ
    CHECK(max_abs_diff(matrix_power(x, 3), Matrix::identity(3)) < 1e-12);
    CHECK(max_abs_diff(matrix_power(z, 3), Matrix::identity(3)) < 1e-12);
}

TEST_CASE("heisenberg-weyl words against the power construction") {
    auto [x, z] = clock_shift(5);
    for (int l = 0; l < 5; ++l)
        for (int m = 0; m < 5; ++m) {
            auto direct = xz_site(5, l, m);
            auto powers = matrix_power(x, l) * matrix_power(z, m);
            CHECK(max_abs_diff(direct, powers) < 1e-12);
        }

    std::vector<int> l{0, 0}, m{0, 0};
    CHECK(max_abs_diff(hw_word(3, l, m), Matrix::identity(9)) < 1e-15);
    std::vector<int> l1{1}, m1{0};
    CHECK(max_abs_diff(hw_word(3, l1, m1), xz_site(3, 1, 0)) < 1e-15);

    std::vector<int> l2{2, 1}, m2{0, 2};
    auto expect = kron(xz_site(3, 2, 0), xz_site(3, 1, 2));
    CHECK(max_abs_diff(hw_word(3, l2, m2), expect) < 1e-14);
}

TEST_CASE("heisenberg-weyl words are trace-orthogonal") {
    for (int order : {3, 5}) {
        for (int l = 0; l < order; ++l)
            for (int m = 0; m < order; ++m)
                for (int lp = 0; lp < order; ++lp)
                    for (int mp = 0; mp < order; ++mp) {
                        Complex tr = trace_product(adjoint(xz_site(order, l, m)), xz_site(order, lp, mp));
                        double expect = (l == lp && m == mp) ? order : 0.0;
                        CHECK(std::abs(tr - Complex{expect, 0}) < 1e-12);
                    }
    }
}

TEST_CASE("commutation identities for prime orders") {
    for (int order : {3, 5}) CHECK(hw_commutation_check(order).pass);
    CHECK_THROWS_AS(hw_commutation_check(4), std::invalid_argument);
}

TEST_CASE("eigensystems of clock-shift words") {
    // Z is diagonal: eigenvalue omega^t pairs with the t-th basis vector.
    auto zpairs = hw_eigensystem(3, 0, 1);
    REQUIRE(zpairs.size() == 3);
    for (const auto& p : zpairs) {
        int t = -1;
        for (int c = 0; c < 3; ++c)
            if (std::abs(p.vector[c]) > 0.9) t = c;
        REQUIRE(t >= 0);
        CHECK(std::abs(p.value - cyclic::root_of_unity(3, t)) < 1e-10);
    }

    // Generic residual check: W v = lambda v.
    for (int order : {3, 5}) {
        for (int m = 0; m < order; ++m) {
            auto pairs = hw_eigensystem(order, 1, m);
            Matrix w = xz_site(order, 1, m);
            for (const auto& p : pairs) {
                double resid = 0.0;
                for (int r = 0; r < order; ++r) {
                    Complex acc{0, 0};
                    for (int c = 0; c < order; ++c) acc += w.at(r, c) * p.vector[c];
                    resid = std::max(resid, std::abs(acc - p.value * p.vector[r]));
                }
                CHECK(resid < 1e-10);
                // Phase convention: first sizable component is real positive.
                for (const auto& v : p.vector) {
                    if (std::abs(v) > 1e-9) {
                        CHECK(v.real() > 0.0);
                        CHECK(std::abs(v.imag()) < 1e-10);
                        break;
                    }
                }
            }
        }
    }
    CHECK_THROWS_AS(hw_eigensystem(5, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(hw_eigensystem(3, 0, 0), std::invalid_argument);
}

TEST_CASE("sigma cover of the index group") {
    for (int order : {2, 3, 5, 7}) CHECK(sigma_cover_check(order).pass);
    CHECK_THROWS_AS(sigma_cover_check(4), std::invalid_argument);
    CHECK_THROWS_AS(sigma_cover_check(9), std::invalid_argument);
}

TEST_CASE("orthogonality of eigenvector expectations under twisted commutation") {
    CHECK(orthogonality_lemma_check(pauli(1), pauli(3)).pass);

    auto [x, z] = clock_shift(3);
    CHECK(orthogonality_lemma_check(x, z).pass);

    CHECK_THROWS_AS(orthogonality_lemma_check(pauli(3), pauli(3)), std::invalid_argument);
}

TEST_CASE("qubit reduction of a single-site word") {
    PauliObservable obs;
    obs.n = 1;
    obs.coeffs.emplace_back(3, Complex{1, 0});  // sigma_3 at the only site
    auto red = reduce_qubit(obs);
    REQUIRE(red.spectrum.coeffs.size() == 1);
    CHECK(red.spectrum.coeffs[0].first == cube::Subset::of({2}));  // eps^(3)_1 slot
    CHECK_THAT(red.spectrum.coeffs[0].second, Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-14));

    std::uint64_t plus = 0;
    CHECK_THAT(red.eval_trace(std::span<const std::uint64_t>(&plus, 1)),
               Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    std::uint64_t minus = 1ull << 2;
    CHECK_THAT(red.eval_trace(std::span<const std::uint64_t>(&minus, 1)),
               Catch::Matchers::WithinAbs(-1.0 / 3.0, 1e-12));
}

TEST_CASE("qubit reduction of the identity is constantly one") {
    PauliObservable obs;
    obs.n = 2;
    obs.coeffs.emplace_back(0, Complex{1, 0});
    auto red = reduce_qubit(obs);
    REQUIRE(red.spectrum.coeffs.size() == 1);
    CHECK(red.spectrum.coeffs[0].first.popcount() == 0);
    Rng rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        std::uint64_t p = rng.u64();
        CHECK_THAT(red.eval_trace(std::span<const std::uint64_t>(&p, 1)),
                   Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("qubit reduction agrees with materialized density matrices") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        int n = 2 + static_cast<int>(seed % 2);
        auto obs = random_hermitian_observable(n, 2, 5, 700 + seed);
        auto red = reduce_qubit(obs);
        auto a = pauli_synthesize(obs);
        Rng rng(900 + seed);
        for (int rep = 0; rep < 20; ++rep) {
            std::uint64_t point = rng.u64();
            auto bit = [&](int kappa, int j) {
                int var = (kappa - 1) * n + j;
                return (point >> var) & 1 ? -1 : 1;
            };
            Matrix rho = qubit_site_density(bit(1, 0), bit(2, 0), bit(3, 0));
            for (int j = 1; j < n; ++j)
                rho = kron(rho, qubit_site_density(bit(1, j), bit(2, j), bit(3, j)));
            Complex direct = trace_product(a, rho);
            CHECK(std::abs(direct.imag()) < 1e-10);
            CHECK_THAT(red.eval_trace(std::span<const std::uint64_t>(&point, 1)),
                       Catch::Matchers::WithinAbs(direct.real(), 1e-10));
        }
    }
}

TEST_CASE("qubit reduction properties") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto obs = random_hermitian_observable(3, 2, 6, 40 + seed);
        auto red = reduce_qubit(obs);

        // Degree is preserved.
        CHECK(cube::degree(red.spectrum) == obs.degree());

        // Coefficient norms: ||f_A||_p is the 3^{-support}-weighted norm.
        int d = std::max(obs.degree(), 1);
        double p = 2.0 * d / (d + 1.0);
        CHECK(cube::coeff_lp_norm(red.spectrum, p) >=
              std::pow(3.0, -d) * coeff_lp_norm(obs, p) * (1.0 - 1e-12));

        // Duality: sampled |tr[A rho]| never beats the operator norm.
        double norm = operator_norm(pauli_synthesize(obs));
        Rng rng(31 + seed);
        for (int rep = 0; rep < 30; ++rep) {
            std::uint64_t point = rng.u64();
            CHECK(std::abs(red.eval_trace(std::span<const std::uint64_t>(&point, 1))) <=
                  norm + 1e-9);
        }
    }

    PauliObservable complex_obs;
    complex_obs.n = 1;
    complex_obs.coeffs.emplace_back(1, Complex{0, 1});
    CHECK_THROWS_AS(reduce_qubit(complex_obs), std::invalid_argument);
}

TEST_CASE("site density matrices are valid states") {
    for (int bits = 0; bits < 8; ++bits) {
        auto rho = qubit_site_density(bits & 1 ? -1 : 1, bits & 2 ? -1 : 1, bits & 4 ? -1 : 1);
        CHECK(std::abs(trace(rho) - Complex{1, 0}) < 1e-12);
        CHECK(is_hermitian(rho));
        CHECK(min_eigenvalue_2x2(rho) >= -1e-12);
    }
}

TEST_CASE("qudit reduction of single-site words") {
    HWObservable obs;
    obs.K = 3;
    obs.n = 1;
    std::vector<std::uint8_t> xw{1, 0};  // l=1, m=0
    obs.coeffs.emplace_back(cyclic::pack_index(xw, 3), Complex{1, 0});
    auto red = reduce_qudit(obs);
    REQUIRE(red.poly.coeffs.size() == 1);
    // Monomial: variable of generator (1,0) at site 0 with exponent 1.
    auto digits = cyclic::unpack_index(red.poly.coeffs[0].first, 3, 4);
    CHECK(digits[0] == 1);
    CHECK(digits[1] + digits[2] + digits[3] == 0);
    CHECK(std::abs(red.poly.coeffs[0].second - Complex{0.25, 0}) < 1e-12);

    HWObservable id;
    id.K = 3;
    id.n = 2;
    std::vector<std::uint8_t> zw(4, 0);
    id.coeffs.emplace_back(cyclic::pack_index(zw, 3), Complex{1, 0});
    auto idred = reduce_qudit(id);
    REQUIRE(idred.poly.coeffs.size() == 1);
    CHECK(idred.poly.coeffs[0].first == 0);
    CHECK(std::abs(idred.poly.coeffs[0].second - Complex{1, 0}) < 1e-14);
}

TEST_CASE("cross-generator projections vanish in trace") {
    const int order = 3;
    for (int gen_a = 0; gen_a <= order; ++gen_a) {
        int la = gen_a < order ? 1 : 0, ma = gen_a < order ? gen_a : 1;
        for (int gen_b = 0; gen_b <= order; ++gen_b) {
            if (gen_a == gen_b) continue;
            int lb = gen_b < order ? 1 : 0, mb = gen_b < order ? gen_b : 1;
            auto pairs = hw_eigensystem(order, lb, mb);
            for (int k = 1; k < order; ++k) {
                Matrix w = xz_site(order, k * la % order, k * ma % order);
                for (const auto& p : pairs) {
                    Matrix proj(order);
                    for (int r = 0; r < order; ++r)
                        for (int c = 0; c < order; ++c)
                            proj.at(r, c) = p.vector[r] * std::conj(p.vector[c]);
                    CHECK(std::abs(trace_product(w, proj)) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("qudit reduction agrees with materialized density matrices") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto obs = random_hw_observable(3, 2, 2, 4, 7000 + seed);
        auto red = reduce_qudit(obs);
        auto a = hw_synthesize(obs);
        Rng rng(7100 + seed);
        const int vars = 4 * 2;
        for (int rep = 0; rep < 15; ++rep) {
            std::vector<std::uint8_t> digits(vars);
            for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(3));
            Matrix rho = red.site_density(digits, 0);
            for (int j = 1; j < 2; ++j) rho = kron(rho, red.site_density(digits, j));
            Complex direct = trace_product(a, rho);
            Complex via = red.eval_trace(digits);
            CHECK(std::abs(direct - via) < 1e-9);
        }
    }
}

TEST_CASE("qudit reduction properties") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto obs = random_hw_observable(3, 2, 3, 5, 300 + seed);
        auto red = reduce_qudit(obs);
        CHECK(red.poly.degree() <= obs.degree());

        // Duality against the operator norm.
        double norm = operator_norm(hw_synthesize(obs));
        Rng rng(400 + seed);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<std::uint8_t> digits(8);
            for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(3));
            CHECK(std::abs(red.eval_trace(digits)) <= norm + 1e-9);
        }
    }
    // K = 5 stays within caps at n = 1.
    auto obs5 = random_hw_observable(5, 1, 3, 3, 11);
    auto red5 = reduce_qudit(obs5);
    CHECK(red5.poly.n == 6);

    HWObservable bad;
    bad.K = 7;
    bad.n = 1;
    std::vector<std::uint8_t> w{1, 0};
    bad.coeffs.emplace_back(cyclic::pack_index(w, 7), Complex{1, 0});
    CHECK_THROWS_AS(reduce_qudit(bad), std::invalid_argument);
}

TEST_CASE("qudit site densities are valid states") {
    auto obs = random_hw_observable(3, 2, 2, 3, 5);
    auto red = reduce_qudit(obs);
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::uint8_t> digits(8);
        for (auto& d : digits) d = static_cast<std::uint8_t>(rng.below(3));
        for (int j = 0; j < 2; ++j) {
            auto rho = red.site_density(digits, j);
            CHECK(std::abs(trace(rho) - Complex{1, 0}) < 1e-12);
            CHECK(is_hermitian(rho, 1e-10));
            Eigen::MatrixXcd em(3, 3);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) em(r, c) = rho.at(r, c);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(em);
            CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        }
    }
}

TEST_CASE("operator norm on closed-form cases") {
    CHECK_THAT(operator_norm(Matrix::identity(4)), Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK_THAT(operator_norm(kron(pauli(1), pauli(3))), Catch::Matchers::WithinAbs(1.0, 1e-9));
    Matrix diag(2);
    diag.at(0, 0) = Complex{3, 0};
    diag.at(1, 1) = Complex{1, 0};
    CHECK_THAT(operator_norm(diag), Catch::Matchers::WithinRel(3.0, 1e-8));
    Matrix zero(3);
    CHECK(operator_norm(zero) == 0.0);
}

TEST_CASE("operator norm matches an svd oracle on random matrices") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        int dim = 2 + static_cast<int>(seed % 7);
        bool herm = seed % 2 == 0;
        auto m = random_matrix(dim, 1000 + seed, herm);
        double got = operator_norm(m);
        double expect = svd_norm_oracle(m);
        CHECK_THAT(got, Catch::Matchers::WithinRel(expect, 1e-8));
    }
}

TEST_CASE("qubit coefficient norms against the operator norm") {
    PauliObservable single;
    single.n = 1;
    single.coeffs.emplace_back(1, Complex{1, 0});
    auto rep = qubit_bh_check(single, 1.0);
    CHECK(rep.pass);
    CHECK_THAT(rep.lhs, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(rep.rhs, Catch::Matchers::WithinAbs(1.0, 1e-9));

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto obs = random_hermitian_observable(3, 2, 6, 2000 + seed);
        double bh = bh::bh_constant_upper(std::max(obs.degree(), 1)).value;
        CHECK(qubit_bh_check(obs, bh).pass);
    }
}

TEST_CASE("qubit chain holds under exhaustive sign enumeration") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto obs = random_hermitian_observable(2, 2, 4, 3000 + seed);
        double bh = bh::bh_constant_upper(std::max(obs.degree(), 1)).value;
        CHECK(qubit_chain_check(obs, bh).pass);
    }
}
