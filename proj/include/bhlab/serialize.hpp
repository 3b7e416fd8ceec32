#ifndef BHLAB_SERIALIZE_HPP
#define BHLAB_SERIALIZE_HPP

#include <json.hpp>

#include "bhlab/boolean_cube.hpp"
#include "bhlab/common.hpp"
#include "bhlab/learning.hpp"
#include "bhlab/quantum.hpp"

namespace bhlab::serialize {

using nlohmann::json;

// {"n": int, "coeffs": [[mask, value], ...]} with masks ascending. Masks are
// exact JSON integers, so spectra above n = 64 are rejected.
inline json spectrum_to_json(const cube::WalshSpectrum& s) {
    if (s.n > 64) throw ResourceLimitError("spectrum_to_json: n > 64 has no integer mask encoding");
    json coeffs = json::array();
    for (const auto& [sub, v] : s.coeffs) coeffs.push_back(json::array({sub.to_mask(), v}));
    return json{{"n", s.n}, {"coeffs", coeffs}};
}

inline cube::WalshSpectrum spectrum_from_json(const json& j) {
    cube::WalshSpectrum s;
    s.n = j.at("n").get<int>();
    if (s.n < 1 || s.n > 64) throw std::invalid_argument("spectrum_from_json: n in [1,64]");
    for (const auto& e : j.at("coeffs"))
        s.coeffs.emplace_back(cube::Subset::from_mask(e.at(0).get<std::uint64_t>()),
                              e.at(1).get<double>());
    s.sort_and_compact();
    return s;
}

// {"K": int, "n": int, "coeffs": [[[l...], [m...], re, im], ...]}
inline json hw_to_json(const quantum::HWObservable& o) {
    json coeffs = json::array();
    for (const auto& [key, c] : o.coeffs) {
        auto [l, m] = o.word(key);
        coeffs.push_back(json::array({json(l), json(m), c.real(), c.imag()}));
    }
    return json{{"K", o.K}, {"n", o.n}, {"coeffs", coeffs}};
}

inline quantum::HWObservable hw_from_json(const json& j) {
    quantum::HWObservable o;
    o.K = j.at("K").get<int>();
    o.n = j.at("n").get<int>();
    if (o.K < 2 || o.n < 1) throw std::invalid_argument("hw_from_json: bad shape");
    for (const auto& e : j.at("coeffs")) {
        auto l = e.at(0).get<std::vector<int>>();
        auto m = e.at(1).get<std::vector<int>>();
        if (static_cast<int>(l.size()) != o.n || static_cast<int>(m.size()) != o.n)
            throw std::invalid_argument("hw_from_json: word arity mismatch");
        std::vector<std::uint8_t> digits;
        digits.reserve(2 * o.n);
        for (int v : l) digits.push_back(static_cast<std::uint8_t>(v));
        for (int v : m) digits.push_back(static_cast<std::uint8_t>(v));
        o.coeffs.emplace_back(cyclic::pack_index(digits, o.K),
                              Complex{e.at(2).get<double>(), e.at(3).get<double>()});
    }
    o.sort_and_compact();
    return o;
}

inline json report_to_json(const CheckReport& r) {
    json j{{"check", r.check}, {"lhs", r.lhs},           {"rhs", r.rhs},
           {"constant", r.constant}, {"constant_tag", r.constant_tag}, {"pass", r.pass}};
    if (!r.details.empty()) j["details"] = r.details;
    return j;
}

inline json trial_to_json(const learning::TrialRecord& r) {
    return json{{"trial", r.trial}, {"n", r.n},       {"d", r.d},          {"N", r.N},
                {"algo", r.algo},   {"l2err", r.l2err}, {"success", r.success}};
}

}  // namespace bhlab::serialize

#endif  // BHLAB_SERIALIZE_HPP
