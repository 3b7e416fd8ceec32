#ifndef BHLAB_COMMON_HPP
#define BHLAB_COMMON_HPP

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bhlab {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
// Coefficients below this magnitude are dropped from sparse maps.
inline constexpr double kSparseDrop = 1e-14;

class ResourceLimitError : public std::runtime_error {
public:
    explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};

// Enumeration cap shared by all exhaustive loops. BHLAB_MAX_POINTS overrides.
inline std::uint64_t max_points() {
    static const std::uint64_t cached = [] {
        if (const char* env = std::getenv("BHLAB_MAX_POINTS")) {
            char* end = nullptr;
            double v = std::strtod(env, &end);
            if (end != env && v >= 1.0) return static_cast<std::uint64_t>(v);
        }
        return std::uint64_t{20000000};
    }();
    return cached;
}

inline void check_points_cap(double count, const char* where) {
    if (count > static_cast<double>(max_points()))
        throw ResourceLimitError(std::string(where) + ": enumeration size " +
                                 std::to_string(count) + " exceeds cap " +
                                 std::to_string(max_points()));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Trial k of a seeded run gets its own stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x51ed2701));
}

// mt19937_64 with portable helpers (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t mask = ~std::uint64_t{0};
        if (bound == 0) throw std::invalid_argument("Rng::below: bound 0");
        std::uint64_t limit = mask - mask % bound;
        std::uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return x % bound;
    }

    // Uniform in [0, 1).
    double real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    double real(double lo, double hi) { return lo + (hi - lo) * real(); }

    int pm1() { return (eng_() & 1) ? 1 : -1; }

    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            std::uint64_t j = i + below(static_cast<std::uint64_t>(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    std::mt19937_64 eng_;
};

// Exact binomial sampler by inverse transform walking out from the mode.
// Works for arbitrary n (the walk stays within a few hundred sds of the mean).
inline std::int64_t binomial_exact(Rng& rng, std::int64_t n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_exact: bad args");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const double u = rng.real();
    const auto log_pmf = [&](std::int64_t k) {
        return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
               std::lgamma(static_cast<double>(n - k) + 1) + k * std::log(p) +
               (n - k) * std::log1p(-p);
    };
    std::int64_t mode = static_cast<std::int64_t>((n + 1) * p);
    if (mode > n) mode = n;
    double pm = std::exp(log_pmf(mode));
    // Two-sided expansion: lo walks down, hi walks up, heavier side first.
    std::int64_t lo = mode, hi = mode;
    double plo = pm, phi = pm, acc = pm;
    if (u <= acc) return mode;
    const double q = p / (1.0 - p);
    while (lo > 0 || hi < n) {
        // pmf(k+1)/pmf(k) = (n-k)/(k+1) * p/(1-p)
        double next_up = (hi < n) ? phi * q * static_cast<double>(n - hi) / static_cast<double>(hi + 1) : 0.0;
        double next_dn = (lo > 0) ? plo / (q * static_cast<double>(n - lo + 1) / static_cast<double>(lo)) : 0.0;
        if (next_up >= next_dn) {
            ++hi;
            phi = next_up;
            acc += phi;
            if (u <= acc) return hi;
        } else {
            --lo;
            plo = next_dn;
            acc += plo;
            if (u <= acc) return lo;
        }
        if (acc >= 1.0 - 1e-15) break;
    }
    return (u < 0.5) ? lo : hi;  // numerically exhausted tail
}

// Ordered fan-out: results land by index, so output is independent of scheduling.
template <typename T>
std::vector<T> run_indexed(std::size_t count, int threads, const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(count);
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            out[i] = fn(i);
        }
    };
    std::vector<std::thread> pool;
    int nt = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

inline double binom(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::int64_t i = 0; i < k; ++i) r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return r;
}

inline bool is_prime(int k) {
    if (k < 2) return false;
    for (int p = 2; p * p <= k; ++p)
        if (k % p == 0) return false;
    return true;
}

// One row of a verification report: lhs <= constant * rhs expected when pass.
struct CheckReport {
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    double constant = 1.0;
    std::string constant_tag;  // formula string for the constant, e.g. "(2+2*sqrt(2))^ell"
    bool pass = false;
    std::string details;
};

}  // namespace bhlab

#endif  // BHLAB_COMMON_HPP
