#ifndef BHLAB_BOOLEAN_CUBE_HPP
#define BHLAB_BOOLEAN_CUBE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "bhlab/common.hpp"

namespace bhlab::cube {

// Dense tables cap out here (2^20 doubles = 8 MB); larger n stays sparse/on-demand.
inline constexpr int kMaxDenseDim = 20;
inline constexpr int kMaxSubsetSize = 20;

// A subset of variables, stored as ascending 0-based indices. Orders like the
// integer whose bit j is set iff j is in the subset, so sorted spectra match
// the mask-ascending wire format. Supports n up to 65536 as long as |S| <= 20.
struct Subset {
    std::uint8_t size = 0;
    std::array<std::uint16_t, kMaxSubsetSize> ix{};

    static Subset of(std::initializer_list<int> indices) {
        Subset s;
        for (int i : indices) s.push(i);
        return s;
    }

    static Subset from_mask(std::uint64_t m) {
        Subset s;
        while (m) {
            int j = std::countr_zero(m);
            s.push(j);
            m &= m - 1;
        }
        return s;
    }

    void push(int index) {
        if (size >= kMaxSubsetSize) throw ResourceLimitError("Subset: size exceeds 20");
        if (index < 0 || index > 65535) throw std::invalid_argument("Subset: index out of range");
        if (size > 0 && index <= ix[size - 1]) throw std::invalid_argument("Subset: indices must ascend");
        ix[size++] = static_cast<std::uint16_t>(index);
    }

    int popcount() const { return size; }

    bool contains(int index) const {
        return std::binary_search(ix.begin(), ix.begin() + size, index);
    }

    std::uint64_t to_mask() const {
        std::uint64_t m = 0;
        for (int i = 0; i < size; ++i) {
            if (ix[i] >= 64) throw std::invalid_argument("Subset::to_mask: index >= 64");
            m |= std::uint64_t{1} << ix[i];
        }
        return m;
    }

    // Parity of the number of -1 coordinates of the point inside this subset;
    // chi_S(x) = +1 when even, -1 when odd. The point is a packed bit array
    // (bit j set means x_j = -1).
    bool odd_on(std::span<const std::uint64_t> point) const {
        unsigned acc = 0;
        for (int i = 0; i < size; ++i) acc ^= (point[ix[i] >> 6] >> (ix[i] & 63)) & 1u;
        return acc & 1u;
    }

    friend bool operator==(const Subset& a, const Subset& b) {
        if (a.size != b.size) return false;
        return std::equal(a.ix.begin(), a.ix.begin() + a.size, b.ix.begin());
    }

    // Numeric mask order: larger top index wins, ties recurse downward.
    friend bool operator<(const Subset& a, const Subset& b) {
        int i = a.size - 1, j = b.size - 1;
        while (i >= 0 && j >= 0) {
            if (a.ix[i] != b.ix[j]) return a.ix[i] < b.ix[j];
            --i;
            --j;
        }
        return i < j;
    }
};

// f : {-1,1}^n -> R as a dense table over point bitmasks.
// Bit j of the mask encodes x_j: 0 -> +1, 1 -> -1.
struct CubeFunction {
    int n = 0;
    std::vector<double> table;

    CubeFunction() = default;
    CubeFunction(int n_, std::vector<double> t) : n(n_), table(std::move(t)) {
        if (n < 1) throw std::invalid_argument("CubeFunction: n must be positive");
        if (n > kMaxDenseDim) throw ResourceLimitError("CubeFunction: n > 20");
        if (table.size() != (std::size_t{1} << n))
            throw std::invalid_argument("CubeFunction: table length != 2^n");
    }
};

// Sparse Fourier side of a cube function: subset-mask -> real coefficient,
// kept sorted by mask for deterministic iteration and the wire format.
struct WalshSpectrum {
    int n = 0;
    std::vector<std::pair<Subset, double>> coeffs;

    double at(const Subset& s) const {
        auto it = std::lower_bound(coeffs.begin(), coeffs.end(), s,
                                   [](const auto& e, const Subset& k) { return e.first < k; });
        if (it != coeffs.end() && it->first == s) return it->second;
        return 0.0;
    }

    void sort_and_compact() {
        std::sort(coeffs.begin(), coeffs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<Subset, double>> merged;
        merged.reserve(coeffs.size());
        for (const auto& [s, v] : coeffs) {
            if (!merged.empty() && merged.back().first == s)
                merged.back().second += v;
            else
                merged.emplace_back(s, v);
        }
        std::erase_if(merged, [](const auto& e) { return std::abs(e.second) < kSparseDrop; });
        coeffs = std::move(merged);
    }
};

// In-place fast butterfly, O(n 2^n). Output index doubles as the subset mask.
inline WalshSpectrum walsh_transform(const CubeFunction& f) {
    if (f.n > kMaxDenseDim) throw ResourceLimitError("walsh_transform: n > 20");
    std::vector<double> buf = f.table;
    const std::size_t size = buf.size();
    for (std::size_t half = 1; half < size; half <<= 1) {
        for (std::size_t base = 0; base < size; base += half << 1) {
            for (std::size_t j = base; j < base + half; ++j) {
                double u = buf[j], v = buf[j + half];
                buf[j] = u + v;
                buf[j + half] = u - v;
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(size);
    WalshSpectrum s;
    s.n = f.n;
    for (std::size_t m = 0; m < size; ++m) {
        double c = buf[m] * scale;
        if (std::abs(c) >= kSparseDrop) s.coeffs.emplace_back(Subset::from_mask(m), c);
    }
    return s;
}

// Pointwise sum over characters; exact inverse of walsh_transform.
inline CubeFunction inverse_walsh(const WalshSpectrum& s) {
    if (s.n < 1) throw std::invalid_argument("inverse_walsh: n must be positive");
    if (s.n > kMaxDenseDim) throw ResourceLimitError("inverse_walsh: n > 20");
    std::vector<double> buf(std::size_t{1} << s.n, 0.0);
    for (const auto& [sub, c] : s.coeffs) buf[sub.to_mask()] = c;
    const std::size_t size = buf.size();
    for (std::size_t half = 1; half < size; half <<= 1) {
        for (std::size_t base = 0; base < size; base += half << 1) {
            for (std::size_t j = base; j < base + half; ++j) {
                double u = buf[j], v = buf[j + half];
                buf[j] = u + v;
                buf[j + half] = u - v;
            }
        }
    }
    return CubeFunction(s.n, std::move(buf));
}

inline int degree(const WalshSpectrum& s) {
    int d = 0;
    for (const auto& [sub, c] : s.coeffs)
        if (std::abs(c) > 0.0) d = std::max(d, sub.popcount());
    return d;
}

inline double coeff_lp_norm(const WalshSpectrum& s, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("coeff_lp_norm: p must be positive");
    double acc = 0.0;
    for (const auto& [sub, c] : s.coeffs) acc += std::pow(std::abs(c), p);
    return std::pow(acc, 1.0 / p);
}

inline double sup_norm(const CubeFunction& f) {
    double m = 0.0;
    for (double v : f.table) m = std::max(m, std::abs(v));
    return m;
}

// L^p over the uniform probability measure on {-1,1}^n.
inline double lp_norm(const CubeFunction& f, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("lp_norm: p must be positive");
    double acc = 0.0;
    for (double v : f.table) acc += std::pow(std::abs(v), p);
    return std::pow(acc / static_cast<double>(f.table.size()), 1.0 / p);
}

inline WalshSpectrum heat_semigroup(const WalshSpectrum& s, double t) {
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: t must be nonnegative");
    WalshSpectrum out;
    out.n = s.n;
    for (const auto& [sub, c] : s.coeffs) {
        double v = c * std::exp(-t * sub.popcount());
        if (std::abs(v) >= kSparseDrop) out.coeffs.emplace_back(sub, v);
    }
    return out;
}

// A +-1 valued function of at most |coords| variables. Evaluable on demand for
// n far beyond the dense-table cap; its exact spectrum lives on the active
// coordinates only.
struct Junta {
    int n = 0;
    std::vector<std::uint16_t> coords;  // ascending
    std::vector<std::int8_t> values;    // 2^coords.size(), +-1, indexed by local pattern

    int arity() const { return static_cast<int>(coords.size()); }

    // point: packed sign bits (bit set = -1), at least ceil(n/64) words.
    double evaluate(std::span<const std::uint64_t> point) const {
        std::size_t local = 0;
        for (std::size_t t = 0; t < coords.size(); ++t)
            local |= ((point[coords[t] >> 6] >> (coords[t] & 63)) & 1u) << t;
        return static_cast<double>(values[local]);
    }

    WalshSpectrum exact_spectrum() const {
        const int j = arity();
        std::vector<double> buf(values.begin(), values.end());
        for (std::size_t half = 1; half < buf.size(); half <<= 1)
            for (std::size_t base = 0; base < buf.size(); base += half << 1)
                for (std::size_t t = base; t < base + half; ++t) {
                    double u = buf[t], v = buf[t + half];
                    buf[t] = u + v;
                    buf[t + half] = u - v;
                }
        const double scale = 1.0 / static_cast<double>(buf.size());
        WalshSpectrum s;
        s.n = n;
        for (std::size_t local = 0; local < buf.size(); ++local) {
            double c = buf[local] * scale;
            if (std::abs(c) < kSparseDrop) continue;
            Subset sub;
            for (int t = 0; t < j; ++t)
                if (local & (std::size_t{1} << t)) sub.push(coords[t]);
            s.coeffs.emplace_back(sub, c);
        }
        s.sort_and_compact();
        return s;
    }

    CubeFunction to_cube() const {
        if (n > kMaxDenseDim) throw ResourceLimitError("Junta::to_cube: n > 20");
        std::vector<double> table(std::size_t{1} << n);
        for (std::size_t m = 0; m < table.size(); ++m) {
            std::uint64_t w = m;
            table[m] = evaluate(std::span<const std::uint64_t>(&w, 1));
        }
        return CubeFunction(n, std::move(table));
    }
};

inline Junta random_junta(int n, int d, std::uint64_t seed) {
    if (d < 1 || d > n) throw std::invalid_argument("random_junta: need 1 <= d <= n");
    if (d > kMaxSubsetSize) throw ResourceLimitError("random_junta: d > 20");
    Rng rng(splitmix64(seed));
    Junta j;
    j.n = n;
    auto picked = rng.sample_without_replacement(n, d);
    std::sort(picked.begin(), picked.end());
    j.coords.assign(picked.begin(), picked.end());
    j.values.resize(std::size_t{1} << d);
    for (auto& v : j.values) v = static_cast<std::int8_t>(rng.pm1());
    return j;
}

// Random +-1 valued function of degree <= d, built as a d-junta.
inline CubeFunction random_low_degree_boolean(int n, int d, std::uint64_t seed) {
    return random_junta(n, d, seed).to_cube();
}

}  // namespace bhlab::cube

#endif  // BHLAB_BOOLEAN_CUBE_HPP
