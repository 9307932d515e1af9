#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lureobs/certify.hpp"
#include "lureobs/model.hpp"
#include "lureobs/sim.hpp"

namespace lureobs {

using json = nlohmann::json;

// ---- declarative scenario blocks (mirror the JSON schema) ----

struct KappaSpec {
    std::string kind; // constant | exp | constant-plus-exp | margin-rule (kappa3 only)
    double value = 0.0;
    double coefficient = 0.0;
    double rate = 0.0;
    double rho = 0.0;
};

struct OperatorSpec {
    std::string kind; // relay-affine | rotor-friction
    double slope = 0.0, offset = 0.0;
    double breakaway = 0.0, t1 = 0.0, t2 = 0.0, rate1 = 0.0, rate2 = 0.0, viscous = 0.0;
    double loop_shift = 0.0;
};

struct TrigTerm {
    double input_coefficient = 0.0;
    std::string trig; // sin | cos
    double amplitude = 0.0;
    std::size_t index = 0;
};

struct NonlinearitySpec {
    std::string kind; // zero | input-matrix | input-plus-trig
    Matrix G;
    std::vector<TrigTerm> terms;
};

struct ComponentSpec {
    std::string kind; // zero | constant | sin-time | cos-time | sin-state | cos-state | constant-plus-exp
    double value = 0.0;
    double amplitude = 0.0;
    double rate = 0.0;
    std::size_t index = 0;
};

struct UncertaintySpec {
    std::vector<ComponentSpec> components;
    std::string time_scale_kind = "one"; // one | exp
    double time_scale_rate = 0.0;
};

struct InputSpec {
    std::string kind; // zero | constant | sine
    double value = 0.0;
    double amplitude = 0.0;
    double rate = 0.0;
};

struct SystemBlock {
    Matrix A, B, C, F;
    double lipschitz_f = 0.0;
    NonlinearitySpec nonlinearity;
    OperatorSpec op;
    UncertaintySpec uncertainty;
    InputSpec input;
};

struct ObserverBlock {
    Matrix P, L, K;
    double epsilon = 0.0;
    KappaSpec kappa1, kappa2, kappa3;
    double delta = 1e-3;
    double sigma_sign = 1e-3;
};

struct SchemeBlock {
    std::string method = "explicit-rk4-regularized";
    double dt = 1e-4;
    double t_end = 20.0;
    double sigma_plant = 1e-3;
};

struct InitialBlock {
    Vector x0, xhat0;
};

struct ChecksBlock {
    bool assumptions = true;     // gate the run on the gain certificate
    double neighborhood = 0.5;   // attractive-set capture slack
    double eta = 0.05;           // relative envelope slack
    double gain_tolerance = 1e-9; // 1e-2 is appropriate for gains published to 4 decimals
};

struct ScenarioConfig {
    std::string name;
    SystemBlock system;
    ObserverBlock observer;
    SchemeBlock scheme;
    InitialBlock initial;
    ChecksBlock checks;
};

// ---- strict JSON parsing ----

namespace detail {

inline std::string quote(const std::string& s) { return "'" + s + "'"; }

inline const json& need(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object()) throw ScenarioParseError(ctx + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ScenarioParseError(ctx + ": missing key " + quote(key));
    return *it;
}

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& ctx) {
    if (!j.is_object()) throw ScenarioParseError(ctx + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ScenarioParseError(ctx + ": unknown key " + quote(it.key()));
    }
}

inline double number(const json& j, const char* key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_number()) throw ScenarioParseError(ctx + "." + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return number(j, key, ctx);
}

inline std::string text(const json& j, const char* key, const std::string& ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_string()) throw ScenarioParseError(ctx + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline Vector vector_from(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw ScenarioParseError(ctx + ": expected an array of numbers");
    Vector out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) throw ScenarioParseError(ctx + ": expected numbers only");
        out.push_back(x.get<double>());
    }
    return out;
}

inline Matrix matrix_from(const json& v, const std::string& ctx) {
    if (!v.is_array() || v.empty()) throw ScenarioParseError(ctx + ": expected a non-empty array of rows");
    std::size_t cols = 0;
    std::vector<double> entries;
    for (const auto& row : v) {
        const Vector r = vector_from(row, ctx);
        if (cols == 0)
            cols = r.size();
        else if (r.size() != cols)
            throw ScenarioParseError(ctx + ": ragged rows");
        entries.insert(entries.end(), r.begin(), r.end());
    }
    if (cols == 0) throw ScenarioParseError(ctx + ": empty rows");
    return Matrix(v.size(), cols, std::move(entries));
}

inline KappaSpec kappa_from(const json& j, const std::string& ctx, bool allow_rule) {
    KappaSpec k;
    k.kind = text(j, "kind", ctx);
    if (k.kind == "constant") {
        reject_unknown(j, {"kind", "value"}, ctx);
        k.value = number(j, "value", ctx);
        if (k.value < 0.0) throw ScenarioParseError(ctx + ": bound functions must be nonnegative");
    } else if (k.kind == "exp") {
        reject_unknown(j, {"kind", "coefficient", "rate"}, ctx);
        k.coefficient = number(j, "coefficient", ctx);
        k.rate = number(j, "rate", ctx);
        if (k.coefficient < 0.0 || k.rate < 0.0)
            throw ScenarioParseError(ctx + ": exp bound needs nonnegative coefficient and rate");
    } else if (k.kind == "constant-plus-exp") {
        reject_unknown(j, {"kind", "value", "coefficient", "rate"}, ctx);
        k.value = number(j, "value", ctx);
        k.coefficient = number(j, "coefficient", ctx);
        k.rate = number(j, "rate", ctx);
        if (k.value < 0.0 || k.coefficient < 0.0 || k.rate < 0.0)
            throw ScenarioParseError(ctx + ": bound parameters must be nonnegative");
    } else if (allow_rule && k.kind == "margin-rule") {
        reject_unknown(j, {"kind", "rho"}, ctx);
        k.rho = number(j, "rho", ctx);
        if (!(k.rho > 0.0)) throw ScenarioParseError(ctx + ": margin-rule needs rho > 0");
    } else {
        throw ScenarioParseError(ctx + ": unknown kind " + quote(k.kind));
    }
    return k;
}

inline json kappa_to(const KappaSpec& k) {
    json j;
    j["kind"] = k.kind;
    if (k.kind == "constant") j["value"] = k.value;
    if (k.kind == "exp") {
        j["coefficient"] = k.coefficient;
        j["rate"] = k.rate;
    }
    if (k.kind == "constant-plus-exp") {
        j["value"] = k.value;
        j["coefficient"] = k.coefficient;
        j["rate"] = k.rate;
    }
    if (k.kind == "margin-rule") j["rho"] = k.rho;
    return j;
}

} // namespace detail

inline ScenarioConfig scenario_from_json(const json& root) {
    using namespace detail;
    ScenarioConfig cfg;
    reject_unknown(root, {"name", "system", "observer", "scheme", "initial", "checks"}, "scenario");
    cfg.name = text(root, "name", "scenario");

    const json& sys = need(root, "system", "scenario");
    reject_unknown(sys,
                   {"A", "B", "C", "F", "lipschitz_f", "nonlinearity", "operator", "uncertainty", "input"},
                   "system");
    cfg.system.A = matrix_from(need(sys, "A", "system"), "system.A");
    cfg.system.B = matrix_from(need(sys, "B", "system"), "system.B");
    cfg.system.C = matrix_from(need(sys, "C", "system"), "system.C");
    cfg.system.F = matrix_from(need(sys, "F", "system"), "system.F");
    cfg.system.lipschitz_f = number(sys, "lipschitz_f", "system");

    const std::size_t n = cfg.system.A.rows();
    if (!cfg.system.A.square()) throw DimensionError("A: must be square");
    if (cfg.system.B.rows() != n)
        throw DimensionError("B: expected " + std::to_string(n) + " rows to match A");
    const std::size_t m = cfg.system.B.cols();
    if (cfg.system.C.rows() != m || cfg.system.C.cols() != n)
        throw DimensionError("C: expected shape " + std::to_string(m) + " x " + std::to_string(n));
    if (cfg.system.F.cols() != n)
        throw DimensionError("F: expected " + std::to_string(n) + " columns to match A");
    const std::size_t p = cfg.system.F.rows();
    if (m != 1)
        throw DimensionError("B: the scenario format supports a single feedback channel (one column)");

    const json& nl = need(sys, "nonlinearity", "system");
    cfg.system.nonlinearity.kind = text(nl, "kind", "system.nonlinearity");
    if (cfg.system.nonlinearity.kind == "zero") {
        reject_unknown(nl, {"kind"}, "system.nonlinearity");
    } else if (cfg.system.nonlinearity.kind == "input-matrix") {
        reject_unknown(nl, {"kind", "G"}, "system.nonlinearity");
        cfg.system.nonlinearity.G = matrix_from(need(nl, "G", "system.nonlinearity"), "system.nonlinearity.G");
        if (cfg.system.nonlinearity.G.rows() != n)
            throw DimensionError("G: expected " + std::to_string(n) + " rows to match A");
        if (cfg.system.nonlinearity.G.cols() != 1)
            throw DimensionError("G: expected one column (scalar input signals)");
    } else if (cfg.system.nonlinearity.kind == "input-plus-trig") {
        reject_unknown(nl, {"kind", "terms"}, "system.nonlinearity");
        const json& terms = need(nl, "terms", "system.nonlinearity");
        if (!terms.is_array() || terms.size() != n)
            throw DimensionError("nonlinearity.terms: expected one term per state component");
        for (const auto& tj : terms) {
            reject_unknown(tj, {"input_coefficient", "trig", "amplitude", "index"},
                           "system.nonlinearity.terms");
            TrigTerm term;
            term.input_coefficient = number(tj, "input_coefficient", "system.nonlinearity.terms");
            term.trig = text(tj, "trig", "system.nonlinearity.terms");
            if (term.trig != "sin" && term.trig != "cos")
                throw ScenarioParseError("system.nonlinearity.terms: trig must be 'sin' or 'cos'");
            term.amplitude = number(tj, "amplitude", "system.nonlinearity.terms");
            const double idx = number(tj, "index", "system.nonlinearity.terms");
            term.index = static_cast<std::size_t>(idx);
            if (term.index >= n) throw DimensionError("nonlinearity.terms: state index out of range");
            cfg.system.nonlinearity.terms.push_back(term);
        }
    } else {
        throw ScenarioParseError("system.nonlinearity: unknown kind " +
                                 detail::quote(cfg.system.nonlinearity.kind));
    }

    const json& opj = need(sys, "operator", "system");
    cfg.system.op.kind = text(opj, "kind", "system.operator");
    if (cfg.system.op.kind == "relay-affine") {
        reject_unknown(opj, {"kind", "slope", "offset"}, "system.operator");
        cfg.system.op.slope = number(opj, "slope", "system.operator");
        cfg.system.op.offset = number(opj, "offset", "system.operator");
    } else if (cfg.system.op.kind == "rotor-friction") {
        reject_unknown(opj, {"kind", "breakaway", "t1", "t2", "rate1", "rate2", "viscous", "loop_shift"},
                       "system.operator");
        cfg.system.op.breakaway = number(opj, "breakaway", "system.operator");
        cfg.system.op.t1 = number(opj, "t1", "system.operator");
        cfg.system.op.t2 = number(opj, "t2", "system.operator");
        cfg.system.op.rate1 = number(opj, "rate1", "system.operator");
        cfg.system.op.rate2 = number(opj, "rate2", "system.operator");
        cfg.system.op.viscous = number(opj, "viscous", "system.operator");
        cfg.system.op.loop_shift = detail::number_or(opj, "loop_shift", 0.0, "system.operator");
    } else {
        throw ScenarioParseError("system.operator: unknown kind " + detail::quote(cfg.system.op.kind));
    }

    const json& un = need(sys, "uncertainty", "system");
    reject_unknown(un, {"components", "time_scale"}, "system.uncertainty");
    const json& comps = need(un, "components", "system.uncertainty");
    if (!comps.is_array() || comps.size() != n)
        throw DimensionError("uncertainty.components: expected one component per state dimension");
    for (const auto& cj : comps) {
        ComponentSpec c;
        c.kind = text(cj, "kind", "system.uncertainty.components");
        const std::string ctx = "system.uncertainty.components";
        if (c.kind == "zero") {
            reject_unknown(cj, {"kind"}, ctx);
        } else if (c.kind == "constant") {
            reject_unknown(cj, {"kind", "value"}, ctx);
            c.value = number(cj, "value", ctx);
        } else if (c.kind == "sin-time" || c.kind == "cos-time") {
            reject_unknown(cj, {"kind", "amplitude", "rate"}, ctx);
            c.amplitude = number(cj, "amplitude", ctx);
            c.rate = number(cj, "rate", ctx);
        } else if (c.kind == "sin-state" || c.kind == "cos-state") {
            reject_unknown(cj, {"kind", "amplitude", "index"}, ctx);
            c.amplitude = number(cj, "amplitude", ctx);
            c.index = static_cast<std::size_t>(number(cj, "index", ctx));
            if (c.index >= n) throw DimensionError("uncertainty.components: state index out of range");
        } else if (c.kind == "constant-plus-exp") {
            reject_unknown(cj, {"kind", "value", "amplitude", "rate"}, ctx);
            c.value = number(cj, "value", ctx);
            c.amplitude = number(cj, "amplitude", ctx);
            c.rate = number(cj, "rate", ctx);
        } else {
            throw ScenarioParseError(ctx + ": unknown kind " + detail::quote(c.kind));
        }
        cfg.system.uncertainty.components.push_back(c);
    }
    if (un.contains("time_scale")) {
        const json& ts = un.at("time_scale");
        reject_unknown(ts, {"kind", "rate"}, "system.uncertainty.time_scale");
        cfg.system.uncertainty.time_scale_kind = text(ts, "kind", "system.uncertainty.time_scale");
        if (cfg.system.uncertainty.time_scale_kind == "exp")
            cfg.system.uncertainty.time_scale_rate = number(ts, "rate", "system.uncertainty.time_scale");
        else if (cfg.system.uncertainty.time_scale_kind != "one")
            throw ScenarioParseError("system.uncertainty.time_scale: kind must be 'one' or 'exp'");
    }

    const json& in = need(sys, "input", "system");
    cfg.system.input.kind = text(in, "kind", "system.input");
    if (cfg.system.input.kind == "zero") {
        reject_unknown(in, {"kind"}, "system.input");
    } else if (cfg.system.input.kind == "constant") {
        reject_unknown(in, {"kind", "value"}, "system.input");
        cfg.system.input.value = number(in, "value", "system.input");
    } else if (cfg.system.input.kind == "sine") {
        reject_unknown(in, {"kind", "amplitude", "rate"}, "system.input");
        cfg.system.input.amplitude = number(in, "amplitude", "system.input");
        cfg.system.input.rate = number(in, "rate", "system.input");
    } else {
        throw ScenarioParseError("system.input: unknown kind " + detail::quote(cfg.system.input.kind));
    }

    const json& ob = need(root, "observer", "scenario");
    reject_unknown(ob, {"P", "L", "K", "epsilon", "kappa1", "kappa2", "kappa3", "delta", "sigma_sign"},
                   "observer");
    cfg.observer.P = matrix_from(need(ob, "P", "observer"), "observer.P");
    cfg.observer.L = matrix_from(need(ob, "L", "observer"), "observer.L");
    cfg.observer.K = matrix_from(need(ob, "K", "observer"), "observer.K");
    if (cfg.observer.P.rows() != n || cfg.observer.P.cols() != n)
        throw DimensionError("P: expected shape " + std::to_string(n) + " x " + std::to_string(n));
    if (cfg.observer.L.rows() != n || cfg.observer.L.cols() != p)
        throw DimensionError("L: expected shape " + std::to_string(n) + " x " + std::to_string(p));
    if (cfg.observer.K.rows() != m || cfg.observer.K.cols() != p)
        throw DimensionError("K: expected shape " + std::to_string(m) + " x " + std::to_string(p));
    cfg.observer.epsilon = detail::number(ob, "epsilon", "observer");
    if (!(cfg.observer.epsilon > 0.0)) throw ScenarioParseError("observer.epsilon: must be positive");
    cfg.observer.kappa1 = detail::kappa_from(need(ob, "kappa1", "observer"), "observer.kappa1", false);
    cfg.observer.kappa2 = detail::kappa_from(need(ob, "kappa2", "observer"), "observer.kappa2", false);
    cfg.observer.kappa3 = detail::kappa_from(need(ob, "kappa3", "observer"), "observer.kappa3", true);
    cfg.observer.delta = detail::number(ob, "delta", "observer");
    cfg.observer.sigma_sign = detail::number(ob, "sigma_sign", "observer");
    if (!(cfg.observer.delta > 0.0)) throw ScenarioParseError("observer.delta: must be positive");
    if (!(cfg.observer.sigma_sign > 0.0)) throw ScenarioParseError("observer.sigma_sign: must be positive");

    const json& sc = need(root, "scheme", "scenario");
    reject_unknown(sc, {"method", "dt", "t_end", "sigma_plant"}, "scheme");
    cfg.scheme.method = detail::text(sc, "method", "scheme");
    if (cfg.scheme.method != "explicit-rk4-regularized" &&
        cfg.scheme.method != "semi-implicit-euler-resolvent")
        throw ScenarioParseError("scheme.method: unknown method " + detail::quote(cfg.scheme.method));
    cfg.scheme.dt = detail::number(sc, "dt", "scheme");
    cfg.scheme.t_end = detail::number(sc, "t_end", "scheme");
    cfg.scheme.sigma_plant = detail::number(sc, "sigma_plant", "scheme");

    const json& init = need(root, "initial", "scenario");
    reject_unknown(init, {"x0", "xhat0"}, "initial");
    cfg.initial.x0 = detail::vector_from(need(init, "x0", "initial"), "initial.x0");
    cfg.initial.xhat0 = detail::vector_from(need(init, "xhat0", "initial"), "initial.xhat0");
    if (cfg.initial.x0.size() != n) throw DimensionError("x0: expected length " + std::to_string(n));
    if (cfg.initial.xhat0.size() != n) throw DimensionError("xhat0: expected length " + std::to_string(n));

    if (root.contains("checks")) {
        const json& ch = root.at("checks");
        reject_unknown(ch, {"assumptions", "neighborhood", "eta", "gain_tolerance"}, "checks");
        if (ch.contains("assumptions")) {
            if (!ch.at("assumptions").is_boolean())
                throw ScenarioParseError("checks.assumptions: expected a boolean");
            cfg.checks.assumptions = ch.at("assumptions").get<bool>();
        }
        cfg.checks.neighborhood = detail::number_or(ch, "neighborhood", cfg.checks.neighborhood, "checks");
        cfg.checks.eta = detail::number_or(ch, "eta", cfg.checks.eta, "checks");
        cfg.checks.gain_tolerance =
            detail::number_or(ch, "gain_tolerance", cfg.checks.gain_tolerance, "checks");
    }
    return cfg;
}

namespace detail {

inline json matrix_to(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

} // namespace detail

inline json scenario_to_json(const ScenarioConfig& cfg) {
    json root;
    root["name"] = cfg.name;

    json sys;
    sys["A"] = detail::matrix_to(cfg.system.A);
    sys["B"] = detail::matrix_to(cfg.system.B);
    sys["C"] = detail::matrix_to(cfg.system.C);
    sys["F"] = detail::matrix_to(cfg.system.F);
    sys["lipschitz_f"] = cfg.system.lipschitz_f;
    json nl;
    nl["kind"] = cfg.system.nonlinearity.kind;
    if (cfg.system.nonlinearity.kind == "input-matrix") nl["G"] = detail::matrix_to(cfg.system.nonlinearity.G);
    if (cfg.system.nonlinearity.kind == "input-plus-trig") {
        json terms = json::array();
        for (const auto& t : cfg.system.nonlinearity.terms)
            terms.push_back({{"input_coefficient", t.input_coefficient},
                             {"trig", t.trig},
                             {"amplitude", t.amplitude},
                             {"index", t.index}});
        nl["terms"] = terms;
    }
    sys["nonlinearity"] = nl;
    json opj;
    opj["kind"] = cfg.system.op.kind;
    if (cfg.system.op.kind == "relay-affine") {
        opj["slope"] = cfg.system.op.slope;
        opj["offset"] = cfg.system.op.offset;
    } else {
        opj["breakaway"] = cfg.system.op.breakaway;
        opj["t1"] = cfg.system.op.t1;
        opj["t2"] = cfg.system.op.t2;
        opj["rate1"] = cfg.system.op.rate1;
        opj["rate2"] = cfg.system.op.rate2;
        opj["viscous"] = cfg.system.op.viscous;
        opj["loop_shift"] = cfg.system.op.loop_shift;
    }
    sys["operator"] = opj;
    json un;
    json comps = json::array();
    for (const auto& c : cfg.system.uncertainty.components) {
        json cj;
        cj["kind"] = c.kind;
        if (c.kind == "constant") cj["value"] = c.value;
        if (c.kind == "sin-time" || c.kind == "cos-time") {
            cj["amplitude"] = c.amplitude;
            cj["rate"] = c.rate;
        }
        if (c.kind == "sin-state" || c.kind == "cos-state") {
            cj["amplitude"] = c.amplitude;
            cj["index"] = c.index;
        }
        if (c.kind == "constant-plus-exp") {
            cj["value"] = c.value;
            cj["amplitude"] = c.amplitude;
            cj["rate"] = c.rate;
        }
        comps.push_back(cj);
    }
    un["components"] = comps;
    json ts;
    ts["kind"] = cfg.system.uncertainty.time_scale_kind;
    if (cfg.system.uncertainty.time_scale_kind == "exp") ts["rate"] = cfg.system.uncertainty.time_scale_rate;
    un["time_scale"] = ts;
    sys["uncertainty"] = un;
    json in;
    in["kind"] = cfg.system.input.kind;
    if (cfg.system.input.kind == "constant") in["value"] = cfg.system.input.value;
    if (cfg.system.input.kind == "sine") {
        in["amplitude"] = cfg.system.input.amplitude;
        in["rate"] = cfg.system.input.rate;
    }
    sys["input"] = in;
    root["system"] = sys;

    json ob;
    ob["P"] = detail::matrix_to(cfg.observer.P);
    ob["L"] = detail::matrix_to(cfg.observer.L);
    ob["K"] = detail::matrix_to(cfg.observer.K);
    ob["epsilon"] = cfg.observer.epsilon;
    ob["kappa1"] = detail::kappa_to(cfg.observer.kappa1);
    ob["kappa2"] = detail::kappa_to(cfg.observer.kappa2);
    ob["kappa3"] = detail::kappa_to(cfg.observer.kappa3);
    ob["delta"] = cfg.observer.delta;
    ob["sigma_sign"] = cfg.observer.sigma_sign;
    root["observer"] = ob;

    json sc;
    sc["method"] = cfg.scheme.method;
    sc["dt"] = cfg.scheme.dt;
    sc["t_end"] = cfg.scheme.t_end;
    sc["sigma_plant"] = cfg.scheme.sigma_plant;
    root["scheme"] = sc;

    json init;
    init["x0"] = cfg.initial.x0;
    init["xhat0"] = cfg.initial.xhat0;
    root["initial"] = init;

    json ch;
    ch["assumptions"] = cfg.checks.assumptions;
    ch["neighborhood"] = cfg.checks.neighborhood;
    ch["eta"] = cfg.checks.eta;
    ch["gain_tolerance"] = cfg.checks.gain_tolerance;
    root["checks"] = ch;
    return root;
}

inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    return scenario_to_json(a) == scenario_to_json(b);
}

// ---- compile declarative blocks into evaluable model pieces ----

inline std::function<double(double)> compile_kappa(const KappaSpec& k) {
    if (k.kind == "constant") return [v = k.value](double) { return v; };
    if (k.kind == "exp") return [c = k.coefficient, r = k.rate](double t) { return c * std::exp(-r * t); };
    if (k.kind == "constant-plus-exp")
        return [v = k.value, c = k.coefficient, r = k.rate](double t) { return v + c * std::exp(-r * t); };
    throw ScenarioParseError("kappa: kind " + detail::quote(k.kind) + " is not directly evaluable");
}

/// Everything needed to simulate and judge one scenario.  eps_used is
/// min(epsilon, eps*): envelopes are only valid for admissible margins, and
/// published gains are sometimes quoted with a slightly optimistic epsilon.
struct CompiledScenario {
    std::string name;
    LureSystem sys;
    ObserverConfig obs;
    SchemeConfig scheme;
    Vector x0, xhat0;
    ChecksBlock checks;
    double eps_given = 0.0;
    double eps_star = 0.0;
    double eps_used = 0.0;
    double kappa2_sup = 0.0; // sup of kappa2 on [0, inf) for the bound kinds used
    std::optional<std::pair<double, double>> kappa2_exp; // (k, a) when kappa2 = k e^{-a t}
};

inline CompiledScenario compile_scenario(const ScenarioConfig& cfg) {
    CompiledScenario out;
    out.name = cfg.name;
    out.checks = cfg.checks;
    out.x0 = cfg.initial.x0;
    out.xhat0 = cfg.initial.xhat0;

    LureSystem& sys = out.sys;
    sys.A = cfg.system.A;
    sys.B = cfg.system.B;
    sys.C = cfg.system.C;
    sys.F = cfg.system.F;
    sys.lipschitz_f = cfg.system.lipschitz_f;

    const std::size_t n = sys.A.rows();

    if (cfg.system.input.kind == "zero")
        sys.u = [](double) { return Vector{0.0}; };
    else if (cfg.system.input.kind == "constant")
        sys.u = [v = cfg.system.input.value](double) { return Vector{v}; };
    else
        sys.u = [a = cfg.system.input.amplitude, w = cfg.system.input.rate](double t) {
            return Vector{a * std::sin(w * t)};
        };

    if (cfg.system.nonlinearity.kind == "zero")
        sys.f = [n](const Vector&, const Vector&, double) { return Vector(n, 0.0); };
    else if (cfg.system.nonlinearity.kind == "input-matrix")
        sys.f = [G = cfg.system.nonlinearity.G](const Vector&, const Vector& u, double) { return G * u; };
    else
        sys.f = [terms = cfg.system.nonlinearity.terms, n](const Vector& x, const Vector& u, double) {
            Vector r(n);
            for (std::size_t i = 0; i < n; ++i) {
                const TrigTerm& tm = terms[i];
                const double trig = tm.trig == "sin" ? std::sin(x[tm.index]) : std::cos(x[tm.index]);
                r[i] = tm.input_coefficient * u[0] + tm.amplitude * trig;
            }
            return r;
        };

    if (cfg.system.op.kind == "relay-affine") {
        sys.op = DiagonalMonotoneOp(relay_affine(cfg.system.op.slope, cfg.system.op.offset));
    } else {
        ScalarMonotoneOp base =
            rotor_friction(cfg.system.op.breakaway, cfg.system.op.t1, cfg.system.op.t2,
                           cfg.system.op.rate1, cfg.system.op.rate2, cfg.system.op.viscous);
        if (cfg.system.op.loop_shift != 0.0) base = loop_transform(base, cfg.system.op.loop_shift);
        sys.op = DiagonalMonotoneOp(std::move(base));
    }

    sys.xi = [comps = cfg.system.uncertainty.components,
              ts_kind = cfg.system.uncertainty.time_scale_kind,
              ts_rate = cfg.system.uncertainty.time_scale_rate, n](double t, const Vector& x) {
        Vector r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const ComponentSpec& c = comps[i];
            if (c.kind == "zero")
                r[i] = 0.0;
            else if (c.kind == "constant")
                r[i] = c.value;
            else if (c.kind == "sin-time")
                r[i] = c.amplitude * std::sin(c.rate * t);
            else if (c.kind == "cos-time")
                r[i] = c.amplitude * std::cos(c.rate * t);
            else if (c.kind == "sin-state")
                r[i] = c.amplitude * std::sin(x[c.index]);
            else if (c.kind == "cos-state")
                r[i] = c.amplitude * std::cos(x[c.index]);
            else // constant-plus-exp
                r[i] = c.value + c.amplitude * std::exp(-c.rate * t);
        }
        if (ts_kind == "exp") {
            const double s = std::exp(-ts_rate * t);
            for (double& v : r) v *= s;
        }
        return r;
    };

    ObserverConfig& obs = out.obs;
    obs.P = cfg.observer.P;
    obs.L = cfg.observer.L;
    obs.K = cfg.observer.K;
    obs.delta = cfg.observer.delta;
    obs.sigma_obs = cfg.observer.sigma_sign;
    obs.kappa1 = compile_kappa(cfg.observer.kappa1);
    obs.kappa2 = compile_kappa(cfg.observer.kappa2);

    out.eps_given = cfg.observer.epsilon;
    out.eps_star = max_admissible_eps(sys.A, sys.F, obs.P, obs.L, sys.lipschitz_f);
    out.eps_used = std::min(out.eps_given, out.eps_star);
    obs.eps = out.eps_used;

    if (cfg.observer.kappa3.kind == "margin-rule") {
        if (!(out.eps_used > 0.0))
            throw ParameterError("kappa3 margin-rule: no admissible margin (stability inequality infeasible)");
        obs.kappa3 = kappa3_rule(cfg.observer.kappa3.rho, out.eps_used, obs.P, obs.kappa2);
    } else {
        obs.kappa3 = compile_kappa(cfg.observer.kappa3);
    }

    // sup of kappa2: the supported kinds are nonincreasing in t
    out.kappa2_sup = obs.kappa2(0.0);
    if (cfg.observer.kappa2.kind == "exp" && cfg.observer.kappa2.rate > 0.0)
        out.kappa2_exp = std::make_pair(cfg.observer.kappa2.coefficient, cfg.observer.kappa2.rate);

    SchemeConfig& sch = out.scheme;
    sch.method = cfg.scheme.method == "explicit-rk4-regularized" ? Method::ExplicitRk4Regularized
                                                                 : Method::SemiImplicitEulerResolvent;
    sch.dt = cfg.scheme.dt;
    sch.t_end = cfg.scheme.t_end;
    sch.sigma_plant = cfg.scheme.sigma_plant;
    sch.sigma_obs = cfg.observer.sigma_sign;

    validate(sys);
    validate(sch);
    return out;
}

// ---- builtin scenarios ----

std::vector<std::string> builtin_scenario_names();
const char* builtin_scenario_text(const std::string& name);
ScenarioConfig load_scenario(const std::string& name_or_path);

namespace builtins {

inline constexpr const char* kExample1 = R"json({
  "name": "example1",
  "system": {
    "A": [[-6, 4, 0], [7, -8, 0], [0, 0, -7]],
    "B": [[4], [6], [-3]],
    "C": [[8, 6, -3]],
    "F": [[1, 0, 0]],
    "lipschitz_f": 4.0,
    "nonlinearity": {"kind": "input-plus-trig", "terms": [
      {"input_coefficient": 1, "trig": "sin", "amplitude": 2, "index": 1},
      {"input_coefficient": 2, "trig": "cos", "amplitude": 3, "index": 0},
      {"input_coefficient": -1, "trig": "sin", "amplitude": 4, "index": 2}]},
    "operator": {"kind": "relay-affine", "slope": 3, "offset": 6},
    "uncertainty": {"components": [
      {"kind": "constant", "value": 2},
      {"kind": "cos-state", "amplitude": 5, "index": 0},
      {"kind": "sin-time", "amplitude": 4, "rate": 1}],
      "time_scale": {"kind": "one"}},
    "input": {"kind": "sine", "amplitude": 5, "rate": 1}
  },
  "observer": {
    "P": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "L": [[0], [11], [0]],
    "K": [[4]],
    "epsilon": 2.0,
    "kappa1": {"kind": "constant", "value": 2.0},
    "kappa2": {"kind": "constant", "value": 6.4031242374328485},
    "kappa3": {"kind": "margin-rule", "rho": 1.0},
    "delta": 0.001,
    "sigma_sign": 0.001
  },
  "scheme": {"method": "explicit-rk4-regularized", "dt": 0.0001, "t_end": 20.0, "sigma_plant": 0.001},
  "initial": {"x0": [1, -1, 2], "xhat0": [-3, 4, 0]},
  "checks": {"assumptions": true, "neighborhood": 0.5, "eta": 0.05, "gain_tolerance": 1e-9}
})json";

inline constexpr const char* kExample2Xi1 = R"json({
  "name": "example2-xi1",
  "system": {
    "A": [[0, 1, -1], [-0.1526, -4.6688, 0], [2.2301, 0, 0.6442]],
    "B": [[0], [0], [30.6748]],
    "C": [[0, 0, 1]],
    "F": [[1, 0, 0]],
    "lipschitz_f": 0.0,
    "nonlinearity": {"kind": "input-matrix", "G": [[0], [8.3841], [0]]},
    "operator": {"kind": "rotor-friction", "breakaway": 0.1642, "t1": 0.0603, "t2": -0.2267,
                 "rate1": 5.7468, "rate2": 0.2941, "viscous": 0.0109, "loop_shift": -0.021},
    "uncertainty": {"components": [
      {"kind": "constant", "value": 1},
      {"kind": "sin-state", "amplitude": 4, "index": 1},
      {"kind": "cos-time", "amplitude": 1, "rate": 1}],
      "time_scale": {"kind": "one"}},
    "input": {"kind": "constant", "value": 2}
  },
  "observer": {
    "P": [[0.2958, 0.0417, 0.06], [0.0417, 0.0286, 0], [0.06, 0, 0.0326]],
    "L": [[3.3069], [-1.214], [-12.229]],
    "K": [[-1.8392]],
    "epsilon": 0.0714,
    "kappa1": {"kind": "constant", "value": 0.175},
    "kappa2": {"kind": "constant", "value": 4.16},
    "kappa3": {"kind": "margin-rule", "rho": 0.5},
    "delta": 0.1,
    "sigma_sign": 0.01
  },
  "scheme": {"method": "explicit-rk4-regularized", "dt": 0.0001, "t_end": 20.0, "sigma_plant": 0.001},
  "initial": {"x0": [1, -1, 2], "xhat0": [-3, 4, 0]},
  "checks": {"assumptions": true, "neighborhood": 0.5, "eta": 0.05, "gain_tolerance": 0.01}
})json";

inline constexpr const char* kExample2Xi2 = R"json({
  "name": "example2-xi2",
  "system": {
    "A": [[0, 1, -1], [-0.1526, -4.6688, 0], [2.2301, 0, 0.6442]],
    "B": [[0], [0], [30.6748]],
    "C": [[0, 0, 1]],
    "F": [[1, 0, 0]],
    "lipschitz_f": 0.0,
    "nonlinearity": {"kind": "input-matrix", "G": [[0], [8.3841], [0]]},
    "operator": {"kind": "rotor-friction", "breakaway": 0.1642, "t1": 0.0603, "t2": -0.2267,
                 "rate1": 5.7468, "rate2": 0.2941, "viscous": 0.0109, "loop_shift": -0.021},
    "uncertainty": {"components": [
      {"kind": "constant-plus-exp", "value": 16.0552, "amplitude": 1, "rate": 1},
      {"kind": "constant-plus-exp", "value": -23.4092, "amplitude": 1, "rate": 2},
      {"kind": "constant-plus-exp", "value": -29.5495, "amplitude": 1, "rate": 1.5}],
      "time_scale": {"kind": "one"}},
    "input": {"kind": "constant", "value": 2}
  },
  "observer": {
    "P": [[0.2958, 0.0417, 0.06], [0.0417, 0.0286, 0], [0.06, 0, 0.0326]],
    "L": [[3.3069], [-1.214], [-12.229]],
    "K": [[-1.8392]],
    "epsilon": 0.0714,
    "kappa1": {"kind": "constant", "value": 2.135},
    "kappa2": {"kind": "constant-plus-exp", "value": 0.001, "coefficient": 1.7320508075688772, "rate": 1},
    "kappa3": {"kind": "margin-rule", "rho": 0.5},
    "delta": 0.1,
    "sigma_sign": 0.01
  },
  "scheme": {"method": "explicit-rk4-regularized", "dt": 0.0001, "t_end": 20.0, "sigma_plant": 0.001},
  "initial": {"x0": [1, -1, 2], "xhat0": [-3, 4, 0]},
  "checks": {"assumptions": true, "neighborhood": 0.5, "eta": 0.05, "gain_tolerance": 0.01}
})json";

} // namespace builtins

inline std::vector<std::string> builtin_scenario_names() {
    return {"example1", "example2-xi1", "example2-xi2"};
}

inline const char* builtin_scenario_text(const std::string& name) {
    if (name == "example1") return builtins::kExample1;
    if (name == "example2-xi1") return builtins::kExample2Xi1;
    if (name == "example2-xi2") return builtins::kExample2Xi2;
    return nullptr;
}

/// Load a builtin by name or a JSON scenario file by path.
inline ScenarioConfig load_scenario(const std::string& name_or_path) {
    if (const char* text = builtin_scenario_text(name_or_path)) {
        return scenario_from_json(json::parse(text));
    }
    std::ifstream in(name_or_path);
    if (!in)
        throw ScenarioParseError("scenario " + detail::quote(name_or_path) +
                                 ": not a builtin name and no such file (builtins: example1, "
                                 "example2-xi1, example2-xi2)");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError("scenario " + detail::quote(name_or_path) + ": " + e.what());
    }
    return scenario_from_json(root);
}

inline void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ScenarioParseError("cannot open " + path.string() + " for writing");
    out << scenario_to_json(cfg).dump(2) << "\n";
}

} // namespace lureobs
