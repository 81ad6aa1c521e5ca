#pragma once

// Data schemas, configuration parsing and result persistence.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ambucare/counterfactual.hpp"
#include "ambucare/did.hpp"
#include "ambucare/logit.hpp"
#include "ambucare/ols.hpp"
#include "ambucare/severity.hpp"
#include "ambucare/synth.hpp"
#include "ambucare/types.hpp"

namespace ambucare::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, p);
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

/// Shortest text that round-trips the double.
inline std::string fmt(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw SchemaError("missing column " + name);
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& what) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(what + " is empty");
    t.header = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto row = split_csv_line(line);
        if (row.size() != t.header.size()) {
            throw SchemaError(what + " line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " fields, got " + std::to_string(row.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void require_columns(const CsvTable& t, const std::vector<std::string>& required, const std::string& what) {
    std::vector<std::string> missing;
    for (const auto& c : required) {
        if (std::find(t.header.begin(), t.header.end(), c) == t.header.end()) missing.push_back(c);
    }
    if (missing.empty()) return;
    std::string msg = what + " is missing required columns:";
    for (const auto& m : missing) msg += " " + m;
    throw SchemaError(msg);
}

inline double parse_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(ctx + ": expected a number, got '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& ctx) {
    const double v = parse_double(s, ctx);
    if (v != std::floor(v)) throw SchemaError(ctx + ": expected an integer, got '" + s + "'");
    return static_cast<int>(v);
}

inline bool parse_flag(const std::string& s, const std::string& ctx) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw SchemaError(ctx + ": expected 0 or 1, got '" + s + "'");
}

inline const std::vector<std::string>& patient_columns() {
    static const std::vector<std::string> cols{"patient_id",   "age",           "male",    "minority",
                                               "urban",        "rural_hukou",   "distance_km", "low_income",
                                               "poor_household", "distant",     "disadvantaged", "high_income",
                                               "facility_choice", "used_ambulatory"};
    return cols;
}

inline const std::vector<std::string>& claim_columns() {
    static const std::vector<std::string> cols{"patient_id",      "year",           "record_type",
                                               "facility_type",   "diagnosis_class", "diagnosis_code",
                                               "total_cost_rmb",  "oop_cost_rmb"};
    return cols;
}

inline std::string patients_csv(std::span<const PatientProfile> pop) {
    std::string out;
    for (const auto& c : patient_columns()) out += (out.empty() ? "" : ",") + c;
    out += "\n";
    auto b = [](bool v) { return v ? "1" : "0"; };
    for (const auto& p : pop) {
        out += p.id + "," + fmt(p.age) + "," + b(p.male) + "," + b(p.minority) + "," + b(p.urban) + "," +
               b(p.rural_hukou) + "," + fmt(p.distance_km) + "," + b(p.poor_household) + "," + b(p.poor_household) +
               "," + b(p.distant) + "," + b(p.disadvantaged) + "," + b(p.high_income) + "," +
               std::to_string(static_cast<int>(p.facility_choice)) + "," + b(p.used_ambulatory) + "\n";
    }
    return out;
}

inline std::string claims_csv(std::span<const ClaimRecord> claims) {
    std::string out;
    for (const auto& c : claim_columns()) out += (out.empty() ? "" : ",") + c;
    out += "\n";
    for (const auto& c : claims) {
        out += c.patient_id + "," + std::to_string(c.year) + "," +
               (c.record_type == RecordType::Ambulatory ? "ambulatory" : "inpatient") + "," +
               std::to_string(static_cast<int>(c.facility)) + "," +
               (c.diagnosis_class == DiagnosisClass::CVD ? "CVD" : "Other") + "," + c.diagnosis_code + "," +
               fmt(c.total_cost) + "," + fmt(c.oop_cost) + "\n";
    }
    return out;
}

/// Patients without severity information; theta is filled in later from claims.
inline std::vector<PatientProfile> read_patients(const fs::path& path) {
    const auto t = parse_csv(read_file(path), path.filename().string());
    require_columns(t, patient_columns(), path.filename().string());
    std::vector<PatientProfile> out;
    std::set<std::string> seen;
    const auto col = [&](const char* n) { return t.column(n); };
    const std::size_t c_id = col("patient_id"), c_age = col("age"), c_male = col("male"), c_min = col("minority"),
                      c_urb = col("urban"), c_rur = col("rural_hukou"), c_dist = col("distance_km"),
                      c_poor = col("poor_household"), c_far = col("distant"), c_dis = col("disadvantaged"),
                      c_hi = col("high_income"), c_fac = col("facility_choice"), c_used = col("used_ambulatory");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string ctx = path.filename().string() + " row " + std::to_string(r + 2);
        PatientProfile p;
        p.id = row[c_id];
        if (!seen.insert(p.id).second) throw SchemaError(ctx + ": duplicate patient_id " + p.id);
        p.age = parse_double(row[c_age], ctx + " age");
        p.male = parse_flag(row[c_male], ctx + " male");
        p.minority = parse_flag(row[c_min], ctx + " minority");
        p.urban = parse_flag(row[c_urb], ctx + " urban");
        p.rural_hukou = parse_flag(row[c_rur], ctx + " rural_hukou");
        p.distance_km = parse_double(row[c_dist], ctx + " distance_km");
        p.poor_household = parse_flag(row[c_poor], ctx + " poor_household");
        p.distant = parse_flag(row[c_far], ctx + " distant");
        p.disadvantaged = parse_flag(row[c_dis], ctx + " disadvantaged");
        p.high_income = parse_flag(row[c_hi], ctx + " high_income");
        try {
            p.facility_choice = facility_from_int(parse_int(row[c_fac], ctx + " facility_choice"));
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError(ctx + ": " + e.what());
        }
        p.used_ambulatory = parse_flag(row[c_used], ctx + " used_ambulatory");
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<ClaimRecord> read_claims(const fs::path& path) {
    const auto t = parse_csv(read_file(path), path.filename().string());
    require_columns(t, claim_columns(), path.filename().string());
    std::vector<ClaimRecord> out;
    out.reserve(t.rows.size());
    const std::size_t c_id = t.column("patient_id"), c_year = t.column("year"), c_type = t.column("record_type"),
                      c_fac = t.column("facility_type"), c_cls = t.column("diagnosis_class"),
                      c_code = t.column("diagnosis_code"), c_tot = t.column("total_cost_rmb"),
                      c_oop = t.column("oop_cost_rmb");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string ctx = path.filename().string() + " row " + std::to_string(r + 2);
        ClaimRecord c;
        c.patient_id = row[c_id];
        c.year = parse_int(row[c_year], ctx + " year");
        if (row[c_type] == "ambulatory") c.record_type = RecordType::Ambulatory;
        else if (row[c_type] == "inpatient") c.record_type = RecordType::Inpatient;
        else throw SchemaError(ctx + ": record_type must be ambulatory or inpatient, got '" + row[c_type] + "'");
        if (row[c_cls] == "CVD") c.diagnosis_class = DiagnosisClass::CVD;
        else if (row[c_cls] == "Other") c.diagnosis_class = DiagnosisClass::Other;
        else throw SchemaError(ctx + ": diagnosis_class must be CVD or Other, got '" + row[c_cls] + "'");
        c.diagnosis_code = row[c_code];
        c.total_cost = parse_double(row[c_tot], ctx + " total_cost_rmb");
        c.oop_cost = parse_double(row[c_oop], ctx + " oop_cost_rmb");
        try {
            c.facility = facility_from_int(parse_int(row[c_fac], ctx + " facility_type"));
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError(ctx + ": " + e.what());
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

inline std::string json_type_name(const json& j) {
    switch (j.type()) {
    case json::value_t::null: return "null";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::string: return "string";
    case json::value_t::array: return "array";
    case json::value_t::object: return "object";
    default: return "value";
    }
}

/// Reads an optional key into `out`, rejecting values of the wrong type with a message naming the key.
template <class T>
void read_key(const json& obj, const std::string& path, const std::string& key, T& out) {
    if (!obj.is_object()) throw ConfigError("config key '" + path + "': expected object, got " + json_type_name(obj));
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string full = path.empty() ? key : path + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("config key '" + full + "': expected boolean, got " + json_type_name(v));
        out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("config key '" + full + "': expected integer, got " + json_type_name(v));
        if (std::is_unsigned_v<T> && v.get<long long>() < 0) throw ConfigError("config key '" + full + "': expected non-negative integer");
        out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("config key '" + full + "': expected number, got " + json_type_name(v));
        out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("config key '" + full + "': expected string, got " + json_type_name(v));
        out = v.get<std::string>();
    } else {
        // Fixed-size or dynamic arrays of numbers.
        if (!v.is_array()) throw ConfigError("config key '" + full + "': expected array, got " + json_type_name(v));
        using E = std::decay_t<decltype(*std::begin(out))>;
        std::vector<E> tmp;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const bool ok = std::is_same_v<E, std::string> ? v[i].is_string()
                            : std::is_integral_v<E>        ? v[i].is_number_integer()
                                                           : v[i].is_number();
            if (!ok) {
                throw ConfigError("config key '" + full + "[" + std::to_string(i) + "]': expected " +
                                  (std::is_same_v<E, std::string> ? "string" : std::is_integral_v<E> ? "integer" : "number") +
                                  ", got " + json_type_name(v[i]));
            }
            tmp.push_back(v[i].get<E>());
        }
        if constexpr (requires { out.push_back(E{}); }) {
            out = T(tmp.begin(), tmp.end());
        } else {
            if (tmp.size() != out.size()) {
                throw ConfigError("config key '" + full + "': expected array of " + std::to_string(out.size()) +
                                  " elements, got " + std::to_string(tmp.size()));
            }
            std::copy(tmp.begin(), tmp.end(), out.begin());
        }
    }
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.key().empty() && it.key().front() == '_') continue;  // comments and provenance notes
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown config key '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
    }
}

inline const json& sub(const json& obj, const std::string& path, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_object()) {
        throw ConfigError("config key '" + (path.empty() ? std::string(key) : path + "." + key) + "': expected object, got " +
                          json_type_name(v));
    }
    return v;
}

inline CostParams cost_params_from_json(const json& j, const std::string& path, CostParams cp = {}) {
    reject_unknown(j, path, {"alpha", "beta", "lambda", "rho", "s_mult", "p_ratio", "money_scale_rmb"});
    read_key(j, path, "alpha", cp.alpha);
    read_key(j, path, "beta", cp.beta);
    read_key(j, path, "rho", cp.rho);
    read_key(j, path, "lambda", cp.lambda);
    read_key(j, path, "s_mult", cp.s_mult);
    read_key(j, path, "p_ratio", cp.p_ratio);
    read_key(j, path, "money_scale_rmb", cp.money_scale_rmb);
    try {
        cp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return cp;
}

inline json to_json(const CostParams& cp) {
    return {{"alpha", cp.alpha}, {"beta", cp.beta},       {"lambda", cp.lambda},
            {"rho", cp.rho},     {"s_mult", cp.s_mult},   {"p_ratio", cp.p_ratio},
            {"money_scale_rmb", cp.money_scale_rmb}};
}

inline PreferenceParams preference_params_from_json(const json& j, const std::string& path, PreferenceParams pp = {}) {
    reject_unknown(j, path, {"gamma_h", "gamma_l", "gamma_R", "gamma_M", "t_b", "t_H", "t_M", "rural_minority"});
    read_key(j, path, "gamma_h", pp.gamma_h);
    read_key(j, path, "gamma_l", pp.gamma_l);
    read_key(j, path, "gamma_R", pp.gamma_R);
    read_key(j, path, "gamma_M", pp.gamma_M);
    read_key(j, path, "t_b", pp.t_b);
    read_key(j, path, "t_H", pp.t_H);
    read_key(j, path, "t_M", pp.t_M);
    read_key(j, path, "rural_minority", pp.rural_minority);
    try {
        pp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return pp;
}

inline json to_json(const PreferenceParams& pp) {
    json j{{"gamma_h", pp.gamma_h}, {"gamma_l", pp.gamma_l}};
    if (pp.rural_minority) {
        j["gamma_R"] = pp.gamma_R;
        j["gamma_M"] = pp.gamma_M;
    }
    j["t_b"] = pp.t_b;
    j["t_H"] = pp.t_H;
    j["t_M"] = pp.t_M;
    j["rural_minority"] = pp.rural_minority;
    return j;
}

inline InsurancePlan plan_from_json(const json& j, const std::string& path, InsurancePlan plan = {}) {
    reject_unknown(j, path, {"phi_pc", "phi_hc_poor", "phi_hc_regular"});
    read_key(j, path, "phi_pc", plan.phi_pc);
    read_key(j, path, "phi_hc_poor", plan.phi_hc_poor);
    read_key(j, path, "phi_hc_regular", plan.phi_hc_regular);
    try {
        plan.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return plan;
}

inline json to_json(const InsurancePlan& p) {
    return {{"phi_pc", p.phi_pc}, {"phi_hc_poor", p.phi_hc_poor}, {"phi_hc_regular", p.phi_hc_regular}};
}

struct SimulateConfig {
    PopulationConfig population;
    std::optional<double> calibrate_use_share;
};

inline SimulateConfig simulate_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    reject_unknown(j, "", {"n_patients", "seed", "shares", "severity", "facility_probs", "age_mean", "age_sd",
                           "distance_log_mean", "distance_log_sd", "true_cost_params", "true_preference_params",
                           "plan", "cost_noise_sd", "years", "policy_shock", "other_diagnoses",
                           "calibrate_use_share"});
    SimulateConfig sc;
    auto& c = sc.population;
    read_key(j, "", "n_patients", c.n_patients);
    read_key(j, "", "seed", c.seed);
    if (j.contains("shares")) {
        const auto& s = sub(j, "", "shares");
        reject_unknown(s, "shares", {"disadvantaged", "poor_within_disadvantaged", "distant_within_disadvantaged",
                                     "minority", "rural", "male", "high_income"});
        read_key(s, "shares", "disadvantaged", c.shares.disadvantaged);
        read_key(s, "shares", "poor_within_disadvantaged", c.shares.poor_within_disadvantaged);
        read_key(s, "shares", "distant_within_disadvantaged", c.shares.distant_within_disadvantaged);
        read_key(s, "shares", "minority", c.shares.minority);
        read_key(s, "shares", "rural", c.shares.rural);
        read_key(s, "shares", "male", c.shares.male);
        read_key(s, "shares", "high_income", c.shares.high_income);
    }
    if (j.contains("severity")) {
        const auto& s = sub(j, "", "severity");
        reject_unknown(s, "severity", {"continuous", "probs", "theta", "beta_a", "beta_b", "cuts"});
        read_key(s, "severity", "continuous", c.severity.continuous);
        read_key(s, "severity", "probs", c.severity.probs);
        read_key(s, "severity", "theta", c.severity.theta);
        read_key(s, "severity", "beta_a", c.severity.beta_a);
        read_key(s, "severity", "beta_b", c.severity.beta_b);
        read_key(s, "severity", "cuts", c.severity.cuts);
        for (double t : c.severity.theta) {
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("config key 'severity.theta': values must lie in (0,1)");
        }
    }
    if (j.contains("facility_probs")) {
        const auto& f = sub(j, "", "facility_probs");
        reject_unknown(f, "facility_probs", {"Mild", "Moderate", "Severe"});
        read_key(f, "facility_probs", "Mild", c.facility_probs[0]);
        read_key(f, "facility_probs", "Moderate", c.facility_probs[1]);
        read_key(f, "facility_probs", "Severe", c.facility_probs[2]);
    }
    read_key(j, "", "age_mean", c.age_mean);
    read_key(j, "", "age_sd", c.age_sd);
    read_key(j, "", "distance_log_mean", c.distance_log_mean);
    read_key(j, "", "distance_log_sd", c.distance_log_sd);
    if (j.contains("true_cost_params")) c.true_cost = cost_params_from_json(sub(j, "", "true_cost_params"), "true_cost_params", c.true_cost);
    if (j.contains("true_preference_params")) {
        c.true_pref = preference_params_from_json(sub(j, "", "true_preference_params"), "true_preference_params", c.true_pref);
    }
    if (j.contains("plan")) c.plan = plan_from_json(sub(j, "", "plan"), "plan", c.plan);
    read_key(j, "", "cost_noise_sd", c.cost_noise_sd);
    read_key(j, "", "years", c.years);
    if (j.contains("policy_shock")) {
        const auto& s = sub(j, "", "policy_shock");
        reject_unknown(s, "policy_shock", {"year", "post_plan", "redraw_tastes"});
        PolicyShock shock;
        shock.post_plan = c.plan;
        read_key(s, "policy_shock", "year", shock.year);
        read_key(s, "policy_shock", "redraw_tastes", shock.redraw_tastes);
        if (s.contains("post_plan")) shock.post_plan = plan_from_json(sub(s, "policy_shock", "post_plan"), "policy_shock.post_plan", c.plan);
        c.shock = shock;
    }
    if (j.contains("other_diagnoses")) {
        const auto& o = sub(j, "", "other_diagnoses");
        reject_unknown(o, "other_diagnoses", {"moderate_range_rmb", "severe_range_rmb", "record_noise_sd", "codes", "code_probs"});
        read_key(o, "other_diagnoses", "moderate_range_rmb", c.other.moderate_range);
        read_key(o, "other_diagnoses", "severe_range_rmb", c.other.severe_range);
        read_key(o, "other_diagnoses", "record_noise_sd", c.other.record_noise_sd);
        read_key(o, "other_diagnoses", "codes", c.other.codes);
        read_key(o, "other_diagnoses", "code_probs", c.other.code_probs);
    }
    if (j.contains("calibrate_use_share")) {
        double t = 0.0;
        read_key(j, "", "calibrate_use_share", t);
        sc.calibrate_use_share = t;
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return sc;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Results

inline json to_json(const RegressionResult& r, bool with_ame = false) {
    json coef = json::object(), se = json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        coef[r.names[i]] = r.coef(static_cast<Eigen::Index>(i));
        se[r.names[i]] = r.robust_se(static_cast<Eigen::Index>(i));
    }
    json j{{"coefficients", coef}, {"robust_se", se}, {"r2", r.r2}, {"adj_r2", r.adj_r2}, {"n_obs", r.n_obs}};
    if (r.n_clusters > 0) j["n_clusters"] = r.n_clusters;
    if (with_ame) {
        json ame = json::object(), ame_se = json::object();
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            if (r.names[i] == "const") continue;
            ame[r.names[i]] = r.ame(static_cast<Eigen::Index>(i));
            ame_se[r.names[i]] = r.ame_se(static_cast<Eigen::Index>(i));
        }
        j["loglik"] = r.loglik;
        j["average_marginal_effects"] = ame;
        j["ame_se"] = ame_se;
    }
    return j;
}

inline json to_json(const LogitFit& f) {
    json se = json::object();
    for (const auto& [k, v] : f.bootstrap_se) se[k] = v;
    return {{"loglik", f.loglik},
            {"converged", f.converged},
            {"grad_norm", f.grad_norm},
            {"iterations", f.iterations},
            {"starts_converged", f.starts_converged},
            {"bootstrap_se", se},
            {"n_bootstrap", f.n_bootstrap},
            {"n_bootstrap_dropped", f.n_dropped}};
}

inline std::string metric_table_csv(const std::vector<std::pair<std::string, ScenarioOutcome>>& rows) {
    std::string out = "scenario,metric,baseline,counterfactual,change,pct_base_baseline,pct_base_counterfactual,pct_custom_base\n";
    for (const auto& [label, o] : rows) {
        for (const auto& m : o.diffs_vs_baseline) {
            out += label + "," + m.metric + "," + fmt(m.baseline) + "," + fmt(m.counterfactual) + "," + fmt(m.change) +
                   "," + fmt(m.pct_base_baseline) + "," + fmt(m.pct_base_counterfactual) + "," +
                   (m.pct_custom_base ? fmt(*m.pct_custom_base) : std::string()) + "\n";
        }
    }
    return out;
}

inline json to_json(const ScenarioOutcome& o) {
    json diffs = json::array();
    for (const auto& m : o.diffs_vs_baseline) {
        json r{{"metric", m.metric},
               {"baseline", m.baseline},
               {"counterfactual", m.counterfactual},
               {"change", m.change},
               {"pct_base_baseline", m.pct_base_baseline},
               {"pct_base_counterfactual", m.pct_base_counterfactual}};
        if (m.pct_custom_base) r["pct_custom_base"] = *m.pct_custom_base;
        diffs.push_back(r);
    }
    return {{"label", o.label},
            {"n_targeted", o.n_targeted},
            {"use_share", o.use_share},
            {"use_share_closed_form", o.use_share_closed_form},
            {"expected_cost_norm", o.expected_cost_norm},
            {"expected_cost_rmb", o.expected_cost_rmb},
            {"welfare", o.welfare},
            {"fiscal_cost_rmb_per_head", o.fiscal_cost_rmb_per_head},
            {"diffs_vs_baseline", diffs}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Manifest

struct Manifest {
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::map<std::string, std::string> outputs;  // file name -> sha256
    double wall_clock_seconds = 0.0;
    json parameters = json::object();
};

inline json to_json(const Manifest& m) {
    json outs = json::object();
    for (const auto& [k, v] : m.outputs) outs[k] = v;
    return {{"command", m.command},
            {"artifact_version", kVersion},
            {"config_digest", m.config_digest},
            {"seed", m.seed},
            {"inputs", m.inputs},
            {"outputs", outs},
            {"parameters", m.parameters},
            {"wall_clock_seconds", m.wall_clock_seconds}};
}

/// Collects output files and writes them, then the manifest, into `dir`.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    void commit(Manifest m) {
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) m.outputs[name] = sha256_hex(content);
        for (const auto& [name, content] : files_) write_atomic(dir_ / name, content);
        write_atomic(dir_ / "manifest.json", dump(to_json(m)));
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace ambucare::io
