#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "ambucare/io.hpp"

namespace fs = std::filesystem;
using ambucare::io::json;
using ambucare::io::read_file;

namespace {

const std::string kCli = AMBUCARE_CLI_PATH;
const std::string kSrc = AMBUCARE_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ambucare_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Run {
    int status;
    std::string err;
};

Run cli(const std::string& args, const fs::path& work) {
    const fs::path err = work / "stderr.txt";
    const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
    const int rc = std::system(cmd.c_str());
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, fs::exists(err) ? read_file(err) : ""};
}

json load(const fs::path& p) { return json::parse(read_file(p)); }

void write(const fs::path& p, const std::string& s) { ambucare::io::write_atomic(p, s); }

std::size_t data_rows(const fs::path& csv) {
    const auto t = ambucare::io::parse_csv(read_file(csv), csv.filename().string());
    return t.rows.size();
}

// A small dataset reused by several tests.
const fs::path& small_data() {
    static const fs::path dir = [] {
        const auto w = scratch("small");
        const auto r = cli("simulate --config " + kSrc + "/configs/simulate_small.json --out " + (w / "data").string(), w);
        EXPECT_EQ(r.status, 0) << r.err;
        return w / "data";
    }();
    return dir;
}

}  // namespace

TEST(CliSimulate, WritesRequestedPatientsAndManifest) {
    const auto& d = small_data();
    EXPECT_EQ(data_rows(d / "patients.csv"), 100u);
    EXPECT_GT(data_rows(d / "claims.csv"), 200u);
    const auto m = load(d / "manifest.json");
    EXPECT_EQ(m["command"], "simulate");
    EXPECT_EQ(m["outputs"]["patients.csv"], ambucare::io::sha256_hex(read_file(d / "patients.csv")));
    const auto truth = load(d / "truth.json");
    EXPECT_TRUE(truth.contains("cost_params"));
    EXPECT_TRUE(truth.contains("preference_params"));
}

TEST(CliSimulate, SameSeedSameBytesDifferentSeedDifferentBytes) {
    const auto w = scratch("repeat");
    const std::string cfg = kSrc + "/configs/simulate_small.json";
    ASSERT_EQ(cli("simulate --config " + cfg + " --out " + (w / "a").string(), w).status, 0);
    ASSERT_EQ(cli("simulate --config " + cfg + " --out " + (w / "b").string(), w).status, 0);
    ASSERT_EQ(cli("simulate --config " + cfg + " --seed 8 --out " + (w / "c").string(), w).status, 0);
    for (const char* f : {"patients.csv", "claims.csv", "truth.json"}) {
        EXPECT_EQ(read_file(w / "a" / f), read_file(w / "b" / f)) << f;
    }
    EXPECT_NE(read_file(w / "a" / "patients.csv"), read_file(w / "c" / "patients.csv"));
    EXPECT_EQ(load(w / "a" / "manifest.json")["config_digest"], load(w / "b" / "manifest.json")["config_digest"]);
}

TEST(CliSimulate, BadConfigFailsWithoutOutput) {
    const auto w = scratch("badcfg");
    write(w / "cfg.json", R"({"n_patients": "lots"})");
    auto r = cli("simulate --config " + (w / "cfg.json").string() + " --out " + (w / "out").string(), w);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("n_patients"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(w / "out"));

    write(w / "cfg.json", R"({"n_patients": 10, "colour": "red"})");
    r = cli("simulate --config " + (w / "cfg.json").string() + " --out " + (w / "out").string(), w);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(w / "out"));

    write(w / "cfg.json", "{not json");
    EXPECT_NE(cli("simulate --config " + (w / "cfg.json").string() + " --out " + (w / "out").string(), w).status, 0);
    EXPECT_NE(cli("simulate --out " + (w / "out").string(), w).status, 0);  // missing --config
    EXPECT_FALSE(fs::exists(w / "out"));
}

TEST(CliEstimate, ThreadCountDoesNotChangeResults) {
    // Large enough that resamples rarely separate.
    const auto w = scratch("threads");
    write(w / "cfg.json", R"({"n_patients": 1000, "seed": 7})");
    ASSERT_EQ(cli("simulate --config " + (w / "cfg.json").string() + " --out " + (w / "data").string(), w).status, 0);
    const auto d = w / "data";
    auto r1 = cli("estimate --data " + d.string() + " --bootstrap 50 --threads 1 --out " + (w / "t1").string(), w);
    ASSERT_EQ(r1.status, 0) << r1.err;
    auto r3 = cli("estimate --data " + d.string() + " --bootstrap 50 --threads 3 --out " + (w / "t3").string(), w);
    ASSERT_EQ(r3.status, 0) << r3.err;
    EXPECT_EQ(read_file(w / "t1" / "params.json"), read_file(w / "t3" / "params.json"));
    const auto p = load(w / "t1" / "params.json");
    EXPECT_EQ(p["logit"]["n_bootstrap"], 50);
    EXPECT_EQ(p["preference_params"].size(), 6u);  // five parameters and the rural_minority flag
}

TEST(CliEstimate, RuralMinorityAddsTwoParameters) {
    const auto w = scratch("rm");
    auto r = cli("estimate --data " + small_data().string() + " --rural-minority --out " + (w / "o").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto pp = load(w / "o" / "params.json")["preference_params"];
    std::size_t numeric = 0;
    for (const auto& [k, v] : pp.items()) numeric += v.is_number();
    EXPECT_EQ(numeric, 7u);
    EXPECT_TRUE(pp.contains("gamma_R"));
    EXPECT_TRUE(pp.contains("gamma_M"));
}

TEST(CliEstimate, ArgumentAndDataErrors) {
    const auto w = scratch("esterr");
    const auto& d = small_data();
    EXPECT_NE(cli("estimate --data " + d.string() + " --bootstrap 10 --out " + (w / "o").string(), w).status, 0);
    EXPECT_NE(cli("estimate --data " + d.string() + " --severity continuous --out " + (w / "o").string(), w).status, 0);
    EXPECT_FALSE(fs::exists(w / "o"));

    // Claims restricted to CVD records cannot support the preference-discounted measure.
    fs::create_directories(w / "cvd");
    fs::copy_file(d / "patients.csv", w / "cvd" / "patients.csv");
    const auto claims = read_file(d / "claims.csv");
    std::string kept;
    std::size_t start = 0;
    while (start < claims.size()) {
        const auto end = claims.find('\n', start);
        const auto line = claims.substr(start, end - start + 1);
        if (start == 0 || line.find(",Other,") == std::string::npos) kept += line;
        start = end + 1;
    }
    write(w / "cvd" / "claims.csv", kept);
    auto r = cli("estimate --data " + (w / "cvd").string() + " --severity pref --out " + (w / "o").string(), w);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("non-CVD"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(w / "o"));

    // A missing column is reported by name.
    fs::create_directories(w / "broken");
    fs::copy_file(d / "claims.csv", w / "broken" / "claims.csv");
    write(w / "broken" / "patients.csv", "patient_id,age\nP1,70\n");
    r = cli("estimate --data " + (w / "broken").string() + " --out " + (w / "o").string(), w);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("facility_choice"), std::string::npos) << r.err;
}

TEST(CliDid, ShockedPanelNegativeAndPlaceboNearZero) {
    const auto w = scratch("did");
    ASSERT_EQ(cli("simulate --config " + kSrc + "/configs/did_shock.json --out " + (w / "shock").string(), w).status, 0);
    auto r = cli("did --data " + (w / "shock").string() + " --out " + (w / "res").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto did = load(w / "res" / "did.json");
    const double truth = load(w / "shock" / "truth.json")["true_policy_effect"];
    ASSERT_EQ(did["specifications"].size(), 3u);
    for (const auto& s : did["specifications"]) {
        EXPECT_LT(s["interaction_coef"].get<double>(), 0.0);
        EXPECT_LT(s["interaction_ame"].get<double>(), 0.0);
    }
    EXPECT_NEAR(did["specifications"][0]["treated_post_effect"].get<double>(), truth, 0.05);

    // Same population with a reform that changes nothing and fresh yearly tastes.
    ASSERT_EQ(cli("simulate --config " + kSrc + "/configs/did_placebo.json --out " + (w / "flat").string(), w).status, 0);
    r = cli("did --data " + (w / "flat").string() + " --out " + (w / "pres").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto p = load(w / "pres" / "did.json")["specifications"][0];
    EXPECT_GT(p["interaction_se"].get<double>(), 1e-3);  // decisions really vary between years
    EXPECT_LT(std::abs(p["interaction_coef"].get<double>()), 2.0 * p["interaction_se"].get<double>());

    // No post-period rows.
    r = cli("did --data " + (w / "flat").string() + " --policy-year 2025 --out " + (w / "none").string(), w);
    EXPECT_NE(r.status, 0);
    EXPECT_FALSE(fs::exists(w / "none"));
}

TEST(CliCounterfactual, BaselineOnlyAndScenarioTables) {
    const auto w = scratch("cf");
    const auto& d = small_data();
    const std::string params = kSrc + "/data/published_params.json";
    auto r = cli("counterfactual --params " + params + " --data " + d.string() + " --out " + (w / "base").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::exists(w / "base" / "scenario_baseline.csv"));
    const auto header = read_file(w / "base" / "comparison.csv").substr(0, 40);
    EXPECT_EQ(header.rfind("metric,baseline_level,baseline_change", 0), 0u) << header;

    r = cli("counterfactual --params " + params + " --data " + d.string() + " --scenario " + kSrc +
                "/configs/scenarios.json --out " + (w / "all").string(),
            w);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto out = load(w / "all" / "outcomes.json")["scenarios"];
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0]["label"], "baseline");

    write(w / "bad.json", R"({"scenarios": [{"kind": "voucher"}]})");
    r = cli("counterfactual --params " + params + " --data " + d.string() + " --scenario " + (w / "bad.json").string() +
                " --out " + (w / "bad").string(),
            w);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("voucher"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(w / "bad"));
}

TEST(CliCurves, PresetProducesGrid) {
    const auto w = scratch("curves");
    auto r = cli("curves --config " + kSrc + "/configs/curves_figure3.json --out " + (w / "o").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(data_rows(w / "o" / "curves.csv"), 3u * 99u);
    write(w / "one.json", R"({"preset": "salience", "grid_points": 1})");
    r = cli("curves --config " + (w / "one.json").string() + " --out " + (w / "one").string(), w);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(data_rows(w / "one" / "curves.csv"), 3u);
}
