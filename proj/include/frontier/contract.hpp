#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace frontier {

enum class ContractKind { vanilla_put, vanilla_call, geo_avg_put, arith_avg_put };
enum class ExerciseStyle { european, american };

inline const char* to_string(ContractKind k) {
    switch (k) {
        case ContractKind::vanilla_put: return "vanilla-put";
        case ContractKind::vanilla_call: return "vanilla-call";
        case ContractKind::geo_avg_put: return "geo-avg-put";
        case ContractKind::arith_avg_put: return "arith-avg-put";
    }
    throw std::logic_error("unreachable");
}

inline const char* to_string(ExerciseStyle s) {
    return s == ExerciseStyle::european ? "european" : "american";
}

inline ContractKind kind_from_string(const std::string& s) {
    if (s == "vanilla-put") return ContractKind::vanilla_put;
    if (s == "vanilla-call") return ContractKind::vanilla_call;
    if (s == "geo-avg-put") return ContractKind::geo_avg_put;
    if (s == "arith-avg-put") return ContractKind::arith_avg_put;
    throw std::invalid_argument("unknown contract kind: '" + s + "'");
}

inline ExerciseStyle style_from_string(const std::string& s) {
    if (s == "european") return ExerciseStyle::european;
    if (s == "american") return ExerciseStyle::american;
    throw std::invalid_argument("unknown exercise style: '" + s + "'");
}

// Whether the payoff reads the running average rather than the current value.
inline bool is_average(ContractKind k) {
    return k == ContractKind::geo_avg_put || k == ContractKind::arith_avg_put;
}

// All supported kinds except vanilla-call exercise when the state is low.
inline bool exercises_below(ContractKind k) { return k != ContractKind::vanilla_call; }

struct ContractSpec {
    ContractKind kind = ContractKind::vanilla_put;
    double strike = 0.0;
    double expiry = 0.0;
    ExerciseStyle style = ExerciseStyle::european;
    int n_steps = 0;

    void validate() const {
        if (!std::isfinite(strike) || strike <= 0.0)
            throw std::invalid_argument("ContractSpec: strike must be > 0");
        if (!std::isfinite(expiry) || expiry <= 0.0)
            throw std::invalid_argument("ContractSpec: expiry must be > 0");
        if (n_steps < 1) throw std::invalid_argument("ContractSpec: n_steps must be >= 1");
    }
};

// Strict field set: exactly {kind, strike, expiry, style, n_steps}. Unknown or
// missing fields are reported by name.
inline ContractSpec contract_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("contract: JSON object expected");
    static const char* fields[] = {"kind", "strike", "expiry", "style", "n_steps"};
    for (const auto& item : j.items()) {
        bool known = std::any_of(std::begin(fields), std::end(fields),
                                 [&](const char* f) { return item.key() == f; });
        if (!known)
            throw std::invalid_argument("contract: unknown field '" + item.key() + "'");
    }
    for (const char* f : fields)
        if (!j.contains(f))
            throw std::invalid_argument(std::string("contract: missing field '") + f + "'");
    ContractSpec c;
    if (!j["kind"].is_string()) throw std::invalid_argument("contract: 'kind' must be a string");
    if (!j["style"].is_string()) throw std::invalid_argument("contract: 'style' must be a string");
    if (!j["strike"].is_number()) throw std::invalid_argument("contract: 'strike' must be a number");
    if (!j["expiry"].is_number()) throw std::invalid_argument("contract: 'expiry' must be a number");
    if (!j["n_steps"].is_number_integer())
        throw std::invalid_argument("contract: 'n_steps' must be an integer");
    c.kind = kind_from_string(j["kind"].get<std::string>());
    c.style = style_from_string(j["style"].get<std::string>());
    c.strike = j["strike"].get<double>();
    c.expiry = j["expiry"].get<double>();
    c.n_steps = j["n_steps"].get<int>();
    c.validate();
    return c;
}

inline nlohmann::json contract_to_json(const ContractSpec& c) {
    return nlohmann::json{{"kind", to_string(c.kind)},
                          {"strike", c.strike},
                          {"expiry", c.expiry},
                          {"style", to_string(c.style)},
                          {"n_steps", c.n_steps}};
}

// State carried along a path: current value and the running average over all
// grid points seen so far (the average includes S_0 and the current point).
struct AugmentedState {
    double s = 0.0;
    double s_bar = 0.0;
};

// Immediate exercise payoff at the given state.
inline double exercise_payoff(const ContractSpec& c, const AugmentedState& st) {
    switch (c.kind) {
        case ContractKind::vanilla_put: return std::max(c.strike - st.s, 0.0);
        case ContractKind::vanilla_call: return std::max(st.s - c.strike, 0.0);
        case ContractKind::geo_avg_put:
        case ContractKind::arith_avg_put: return std::max(c.strike - st.s_bar, 0.0);
    }
    throw std::logic_error("unreachable");
}

// Running-average recurrence. i is the index of the newly observed point;
// at i = 0 the average is the point itself.
inline double update_average(ContractKind kind, double s_bar_prev, int i, double s_i) {
    if (i == 0) return s_i;
    if (s_i <= 0.0) throw std::invalid_argument("update_average: value must be > 0");
    if (kind == ContractKind::arith_avg_put)
        return (i * s_bar_prev + s_i) / (i + 1);
    if (kind == ContractKind::geo_avg_put)
        return std::exp((i * std::log(s_bar_prev) + std::log(s_i)) / (i + 1));
    throw std::invalid_argument("update_average: kind has no running average");
}

inline double discount_factor(double r, double dt) {
    if (!(dt >= 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("discount_factor: dt must be >= 0");
    return std::exp(-r * dt);
}

} // namespace frontier
