// Tests for the deterministic JSON layer and the config-driven task runner:
// golden serialization rules, digest invariance, exit-code contract, task
// payloads against known small systems, and sweep expansion/aggregation.

#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "compasskit/jsonio.hpp"
#include "compasskit/runner.hpp"

using namespace compasskit;
using jsonio::JValue;
using nlohmann::json;

namespace {

// Convenience: run a config given as raw JSON text and parse the record back.
struct Ran {
    int exit_code;
    json record;
    std::map<std::string, std::string> files;
};

Ran run_text(const std::string& raw) {
    auto r = runner::run_task_text(raw);
    return {r.exit_code, json::parse(r.record.dump()), r.files};
}

}  // namespace

TEST_CASE("deterministic writer: sorted keys, fixed float format, escapes",
          "[jsonio]") {
    JValue o = JValue::object();
    o.set("zeta", JValue::integer(-3));
    o.set("alpha", JValue::number(0.1));
    o.set("mid", JValue::boolean(true));
    JValue arr = JValue::array();
    arr.push(JValue::number(1.0));
    arr.push(JValue::null());
    arr.push(JValue::string("a\"b\\c\nd"));
    o.set("list", arr);

    // Keys come out sorted regardless of insertion order; 0.1 prints with 17
    // significant digits; 1.0 round-trips as "1".
    REQUIRE(o.dump() ==
            "{\"alpha\":0.10000000000000001,"
            "\"list\":[1,null,\"a\\\"b\\\\c\\nd\"],"
            "\"mid\":true,"
            "\"zeta\":-3}");

    // Non-finite doubles become quoted markers instead of invalid JSON.
    REQUIRE(JValue::number(std::nan("")).dump() == "\"nan\"");
    REQUIRE(JValue::number(-1.0 / 0.0).dump() == "\"-inf\"");

    // Control characters are \u-escaped.
    REQUIRE(JValue::string(std::string(1, '\x01')).dump() == "\"\\u0001\"");
}

TEST_CASE("config digest ignores key order and whitespace, sees values",
          "[jsonio]") {
    auto a = json::parse(R"({"task":"certificate","lattice":{"kind":"parallelogram","L":3,"shift":1}})");
    auto b = json::parse(R"({
        "lattice": { "shift": 1, "L": 3, "kind": "parallelogram" },
        "task": "certificate"
    })");
    REQUIRE(jsonio::config_digest(a) == jsonio::config_digest(b));
    REQUIRE(jsonio::config_digest(a).substr(0, 6) == "fnv1a:");
    REQUIRE(jsonio::config_digest(a).size() == 6 + 16);

    auto c = a;
    c["lattice"]["L"] = 4;
    REQUIRE(jsonio::config_digest(a) != jsonio::config_digest(c));

    // The digest sees JSON values, not spellings: 1 and 1.0 are the same
    // number, so they canonicalize (and hash) identically.
    auto d = json::parse(R"({"x": 1})");
    auto e = json::parse(R"({"x": 1.0})");
    REQUIRE(jsonio::config_digest(d) == jsonio::config_digest(e));
    auto f = json::parse(R"({"x": 1.5})");
    REQUIRE(jsonio::config_digest(d) != jsonio::config_digest(f));
}

TEST_CASE("config schema rejections map to exit code 2", "[runner]") {
    // Unparseable text.
    REQUIRE(run_text("{nope").exit_code == 2);
    // Missing task.
    REQUIRE(run_text(R"({"lattice":{"kind":"square_open","L":2}})").exit_code == 2);
    // Unknown task.
    REQUIRE(run_text(R"({"task":"frobnicate","lattice":{"kind":"square_open","L":2}})")
                .exit_code == 2);
    // Missing lattice block entirely.
    REQUIRE(run_text(R"({"task":"certificate"})").exit_code == 2);
    // Missing required L.
    REQUIRE(run_text(R"({"task":"certificate","lattice":{"kind":"square_open"}})")
                .exit_code == 2);
    // Misspelled top-level key.
    REQUIRE(run_text(R"({"task":"certificate","latice":{"kind":"square_open","L":2}})")
                .exit_code == 2);
    // Wrong value type.
    REQUIRE(run_text(R"({"task":"certificate","lattice":{"kind":"square_open","L":"2"}})")
                .exit_code == 2);
    // Non-positive tolerance.
    REQUIRE(run_text(R"({"task":"certificate","lattice":{"kind":"square_open","L":2},
                         "tolerances":{"rel":0.0}})")
                .exit_code == 2);

    // The error object is machine readable.
    auto r = run_text(R"({"task":"frobnicate","lattice":{"kind":"square_open","L":2}})");
    REQUIRE(r.record["status"] == "error");
    REQUIRE(r.record["errors"].size() == 1);
    REQUIRE(r.record["errors"][0]["code"] == "config");
    REQUIRE(r.record["errors"][0]["message"].get<std::string>().find("frobnicate") !=
            std::string::npos);
}

TEST_CASE("certificate task: parallelogram L=3 gives M=3, bound 8", "[runner]") {
    const std::string cfg = R"({
        "task": "certificate",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1}
    })";
    auto r = run_text(cfg);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["status"] == "pass");
    REQUIRE(r.record["task"] == "certificate");
    REQUIRE(r.record["tool"] == "compasskit");
    REQUIRE(r.record["payload"]["M"] == 3);
    REQUIRE(r.record["payload"]["bound"] == 8);
    REQUIRE(r.record["payload"]["U"].size() == 3);
    REQUIRE(r.record["payload"]["V_subsets"].size() == 3);
    // One parity row per x-foliation line: the sheared L=3 strip spans
    // x = 0..4, and each row has one entry per y-line.
    REQUIRE(r.record["payload"]["parity_matrix"].size() == 5);
    for (const auto& row : r.record["payload"]["parity_matrix"])
        REQUIRE(row.size() == 3);
    // The record echoes the config and its digest.
    REQUIRE(r.record["config"]["lattice"]["L"] == 3);
    REQUIRE(r.record["config_digest"] ==
            jsonio::config_digest(json::parse(cfg)));

    // Payloads are bit-identical across repeated runs.
    auto first = runner::run_task_text(cfg);
    auto second = runner::run_task_text(cfg);
    REQUIRE(first.record.at("payload").dump() == second.record.at("payload").dump());
}

TEST_CASE("certificate task: rank-0 case is a verdict failure, exit 1", "[runner]") {
    auto r = run_text(R"({
        "task": "certificate",
        "lattice": {"kind": "cubic_open", "L": 2},
        "model": {"kind": "cubic_compass"}
    })");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.record["status"] == "fail");
    REQUIRE(r.record["errors"][0]["code"] == "verdict");
}

TEST_CASE("census task: square_open L=3 ground multiplicity is exactly 2",
          "[runner]") {
    auto r = run_text(R"({
        "task": "census",
        "lattice": {"kind": "square_open", "L": 3}
    })");
    REQUIRE(r.exit_code == 0);
    const auto& cen = r.record["payload"]["census"];
    REQUIRE(cen["verdict"] == true);
    REQUIRE(cen["divisor"] == 2);  // from the certificate bound, M=1
    REQUIRE(cen["groups"][0]["multiplicity"] == 2);
    REQUIRE(r.record["payload"]["certificate_M"] == 1);
}

TEST_CASE("census task: an explicit impossible divisor fails the verdict",
          "[runner]") {
    auto r = run_text(R"({
        "task": "census",
        "lattice": {"kind": "square_open", "L": 2},
        "task_options": {"census_divisor": 16}
    })");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.record["status"] == "fail");
    REQUIRE(r.record["errors"][0]["code"] == "verdict");
}

TEST_CASE("spectrum task: sector payload plus CSV artifact", "[runner]") {
    auto r = run_text(R"({
        "task": "spectrum",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["n_sites"] == 4);
    REQUIRE(r.record["payload"]["sectors"].size() == 4);
    for (const auto& s : r.record["payload"]["sectors"]) {
        REQUIRE(s["dim"] == 4);
        REQUIRE(s["eigenvalues"].size() == 4);
        REQUIRE(s["method"] == "dense");
        // Full dense solve without vectors: residual not computed, marked -1.
        REQUIRE(s["max_residual"] == -1.0);
    }
    REQUIRE(r.files.count("spectrum.csv") == 1);
    const std::string& csv = r.files.at("spectrum.csv");
    REQUIRE(csv.rfind("sector,index,E\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 16);
}

TEST_CASE("budget overruns exit with code 3", "[runner]") {
    auto r = run_text(R"({
        "task": "spectrum",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1},
        "solver": {"dense_budget": 32}
    })");
    REQUIRE(r.exit_code == 3);
    REQUIRE(r.record["status"] == "error");
    REQUIRE(r.record["errors"][0]["code"] == "budget");
}

TEST_CASE("sector-compare task: pass on parallelogram, fail on square",
          "[runner]") {
    auto ok = run_text(R"({
        "task": "sector-compare",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1}
    })");
    REQUIRE(ok.exit_code == 0);
    REQUIRE(ok.record["payload"]["n_sectors"] == 8);
    REQUIRE(ok.record["payload"]["max_rel_dev"].get<double>() <= 1e-9);

    auto bad = run_text(R"({
        "task": "sector-compare",
        "lattice": {"kind": "square_open", "L": 3}
    })");
    REQUIRE(bad.exit_code == 1);
    REQUIRE(bad.record["payload"]["max_rel_dev"].get<double>() > 1e-3);
}

TEST_CASE("verify-symmetries task: lines pass on the open model, a transverse "
          "term breaks them",
          "[runner]") {
    auto ok = run_text(R"({
        "task": "verify-symmetries",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1}
    })");
    REQUIRE(ok.exit_code == 0);
    REQUIRE(ok.record["payload"]["all_exact"] == true);
    REQUIRE(ok.record["payload"]["directions"].size() == 2);

    // A single sigma^x field term anticommutes with the sigma^y line through
    // its site, so the y-direction check must report a failing line.
    auto bad = run_text(R"({
        "task": "verify-symmetries",
        "lattice": {"kind": "square_open", "L": 2},
        "model": {"kind": "generic",
                  "terms": [{"coeff": 0.3, "paulis": [[0, "x"]]}]}
    })");
    REQUIRE(bad.exit_code == 1);
    REQUIRE(bad.record["payload"]["all_exact"] == false);
    bool saw_failing_line = false;
    for (const auto& dir : bad.record["payload"]["directions"])
        for (const auto& line : dir["lines"])
            if (line["exact"] == false) saw_failing_line = true;
    REQUIRE(saw_failing_line);
}

TEST_CASE("zipper-analysis task: projected seam block is diagonal", "[runner]") {
    auto r = run_text(R"({
        "task": "zipper-analysis",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 0.5}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["multiplet_dim"] == 4);
    REQUIRE(r.record["payload"]["max_offdiag"].get<double>() == 0.0);
    REQUIRE(r.record["payload"]["splitting"].get<double>() ==
            Catch::Approx(r.record["payload"]["diag_spread"].get<double>())
                .margin(1e-12));

    // Wrong geometry is a config error.
    auto bad = run_text(R"({
        "task": "zipper-analysis",
        "lattice": {"kind": "square_open", "L": 2}
    })");
    REQUIRE(bad.exit_code == 2);
}

TEST_CASE("free-fermion task: the dispersion formula mismatch is an honest fail",
          "[runner]") {
    auto r = run_text(R"({
        "task": "free-fermion",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 1.0}
    })");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.record["payload"]["zero_mode_present"] == true);
    REQUIRE(r.record["payload"]["multisets_match"] == false);
    REQUIRE(r.record["payload"]["max_gap_dev"].get<double>() > 1.0);
    REQUIRE(r.record["errors"][0]["code"] == "verdict");
}

TEST_CASE("perturbation-sweep task: single-point cylinder band", "[runner]") {
    auto r = run_text(R"({
        "task": "perturbation-sweep",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 0.7}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["multiplet_dim"] == 4);
    REQUIRE(r.record["payload"]["ratio"].get<double>() == 0.7);
    REQUIRE(r.record["payload"]["spread"].get<double>() ==
            Catch::Approx(2.37924020e-01).epsilon(1e-8));
}

TEST_CASE("entropy task: certified bound met on square_open L=3", "[runner]") {
    auto r = run_text(R"({
        "task": "entropy",
        "lattice": {"kind": "square_open", "L": 3}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["bound_bits"] == 1);
    REQUIRE(r.record["payload"]["multiplet_dim"] == 2);
    REQUIRE(r.record["payload"]["multiplet_is_exactly_2_to_M"] == true);
    REQUIRE(r.record["payload"]["entropy_bits"].get<double>() ==
            Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("classical-orbit task: random angles give a full orbit", "[runner]") {
    auto r = run_text(R"({
        "task": "classical-orbit",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1},
        "task_options": {"angle_mode": "random", "angle_seed": 11}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["orbit_size"] == 8);
    REQUIRE(r.record["payload"]["expected"] == 8);
    REQUIRE(r.record["payload"]["energy_spread"].get<double>() == 0.0);
    REQUIRE(r.record["payload"]["warnings"].empty());

    // Explicit angles must match the site count.
    auto bad = run_text(R"({
        "task": "classical-orbit",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1},
        "task_options": {"angles": [0.1, 0.2]}
    })");
    REQUIRE(bad.exit_code == 2);
}

TEST_CASE("correlator-decay task: in-row XX correlators from the ground state",
          "[runner]") {
    auto r = run_text(R"({
        "task": "correlator-decay",
        "lattice": {"kind": "square_open", "L": 3}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["separations"] == json::parse("[1,2]"));
    REQUIRE(r.record["payload"]["values"].size() == 2);
    for (const auto& v : r.record["payload"]["values"])
        REQUIRE(std::abs(v.get<double>()) <= 1.0 + 1e-12);
}

TEST_CASE("variational-strings task: orthogonal orbit with the right extremes",
          "[runner]") {
    auto r = run_text(R"({
        "task": "variational-strings",
        "lattice": {"kind": "parallelogram", "L": 3, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 0.7}
    })");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.record["payload"]["flip_patterns"].size() == 8);
    REQUIRE(r.record["payload"]["max_overlap"].get<double>() <= 1e-12);
    REQUIRE(r.record["payload"]["uniform_is_min"] == true);
    REQUIRE(r.record["payload"]["staggered_is_max"] == true);
}

TEST_CASE("axis parsing and template expansion", "[sweep]") {
    auto ax = runner::parse_axis("L=2,3,4");
    REQUIRE(ax.key == "L");
    REQUIRE(ax.values == std::vector<std::string>{"2", "3", "4"});
    REQUIRE_THROWS_AS(runner::parse_axis("L"), std::invalid_argument);
    REQUIRE_THROWS_AS(runner::parse_axis("=2"), std::invalid_argument);
    REQUIRE_THROWS_AS(runner::parse_axis("L=2,,3"), std::invalid_argument);

    auto templ = json::parse(R"({
        "task": "perturbation-sweep",
        "lattice": {"kind": "parallelogram", "L": 9, "shift": 1},
        "model": {"Jx": 2.0, "Jy": 0.0}
    })");
    auto configs = runner::expand_template(
        templ, {runner::parse_axis("L=2,3"), runner::parse_axis("ratio=0.5")});
    REQUIRE(configs.size() == 2);
    // First axis is outermost; ratio multiplies the template's Jx.
    REQUIRE(configs[0]["lattice"]["L"] == 2);
    REQUIRE(configs[1]["lattice"]["L"] == 3);
    REQUIRE(configs[0]["model"]["Jy"].get<double>() == 1.0);

    // Dotted paths reach arbitrary numeric fields.
    auto cfgs2 = runner::expand_template(templ, {runner::parse_axis("model.Jz=0.25")});
    REQUIRE(cfgs2[0]["model"]["Jz"].get<double>() == 0.25);

    REQUIRE_THROWS_AS(
        runner::expand_template(templ, {runner::parse_axis("L=x")}),
        std::invalid_argument);
}

TEST_CASE("sweep: aggregate CSV with per-ratio fit, bit-exact point payloads",
          "[sweep]") {
    auto templ = json::parse(R"({
        "task": "perturbation-sweep",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 0.5}
    })");
    auto sw = runner::run_sweep(
        templ, {runner::parse_axis("L=2,3"), runner::parse_axis("ratio=0.5")}, 1);
    REQUIRE(sw.exit_code == 0);
    REQUIRE(sw.points.size() == 2);

    // Pinned column header, one line per point.
    REQUIRE(sw.csv.rfind("L,ratio,multiplet_dim,spread,fit_slope\n", 0) == 0);
    REQUIRE(std::count(sw.csv.begin(), sw.csv.end(), '\n') == 1 + 2);

    // The spread shrinks with L, so the shared fit slope is negative and both
    // rows of the ratio group carry the same value.
    json agg = json::parse(sw.aggregate.dump());
    REQUIRE(agg["rows"].size() == 2);
    REQUIRE(agg["rows"][0]["multiplet_dim"] == 4);
    REQUIRE(agg["rows"][1]["multiplet_dim"] == 8);
    const double slope0 = agg["rows"][0]["fit_slope"].get<double>();
    const double slope1 = agg["rows"][1]["fit_slope"].get<double>();
    REQUIRE(slope0 == slope1);
    REQUIRE(slope0 < 0.0);
    REQUIRE(agg["rows"][0]["spread"].get<double>() >
            agg["rows"][1]["spread"].get<double>());

    // Sweep points reproduce single runs bit-exactly.
    auto single = runner::run_task(sw.points[1].config);
    REQUIRE(sw.points[1].result.record.at("payload").dump() ==
            single.record.at("payload").dump());

    // Sweeping any other task is a config error.
    auto other = templ;
    other["task"] = "certificate";
    REQUIRE_THROWS_AS(runner::run_sweep(other, {runner::parse_axis("L=2,3")}, 1),
                      std::invalid_argument);
}

TEST_CASE("sweep: a failing point is marked and the rest complete", "[sweep]") {
    auto templ = json::parse(R"({
        "task": "perturbation-sweep",
        "lattice": {"kind": "parallelogram", "L": 2, "shift": 1},
        "model": {"Jx": 1.0, "Jy": 0.5}
    })");
    // L=7 means 49 sites: far beyond the sector-partition limit, so that point
    // fails with a config error while L=2 still completes.
    auto sw = runner::run_sweep(templ, {runner::parse_axis("L=2,7")}, 1);
    REQUIRE(sw.points.size() == 2);
    REQUIRE(sw.points[0].result.exit_code == 0);
    REQUIRE(sw.points[1].result.exit_code == 2);
    REQUIRE(sw.exit_code == 2);

    json agg = json::parse(sw.aggregate.dump());
    REQUIRE(agg["rows"][1]["status"] == "error");
    // The failed row keeps L and ratio but leaves the result cells empty.
    REQUIRE(sw.csv.find("\n7,0.5,,,\n") != std::string::npos);
    // The good row still gets its numbers (no fit: only one surviving L).
    REQUIRE(agg["rows"][0]["spread"].get<double>() > 0.1);
    REQUIRE(agg["rows"][0]["fit_slope"].is_null());
}
