#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sohb/sohb.hpp"

using namespace sohb;
using Catch::Matchers::WithinAbs;

namespace {

ConfigTree parse(const std::string& text) {
    std::istringstream is(text);
    ConfigTree t;
    boost::property_tree::read_ini(is, t);
    return t;
}

}  // namespace

TEST_CASE("presets", "[config]") {
    CHECK(preset("test1").L_g == 1e-3);
    CHECK(preset("test3").L_g == 1.5e-3);
    CHECK(preset("test4").lim.lower == 0.0);
    CHECK(preset("test2").lim.upper == 200.0);
    CHECK_THROWS_AS(preset("nope"), config_error);
    CHECK(preset_names().size() == 5);
}

TEST_CASE("system section with overrides", "[config]") {
    const SystemParams p = params_from_tree(parse("[system]\npreset = test4\nL_g = 1.2e-3\nu_dc_ref = 800\n"));
    CHECK(p.L_g == 1.2e-3);
    CHECK(p.lim.upper == 200.0);
    CHECK_THAT(p.k_pwm, WithinAbs(2.0 / 800.0, 1e-15));
    CHECK_THROWS_AS(params_from_tree(parse("[system]\nL_gg = 1\n")), config_error);
    CHECK_THROWS_AS(params_from_tree(parse("[system]\nL_g = 1e-3x\n")), config_error);
    CHECK_THROWS_AS(params_from_tree(parse("[other]\nL_g = 1\n")), config_error);
    CHECK_THROWS_AS(params_from_tree(parse("[system]\ni_up = -600\n")), config_error);
}

TEST_CASE("scenario sections", "[config]") {
    const Scenario sc = scenario_from_tree(parse(
        "[system]\npreset = test1\n[initial]\nL_g = 0.2e-3\n[events]\nL_g@3 = 1e-3\ni_up@5 = 300\n[scenario]\nduration = 12\n"));
    CHECK(sc.initial.L_g == 0.2e-3);
    REQUIRE(sc.events.size() == 2);
    CHECK(sc.events[0].t == 3.0);
    CHECK(sc.events[1].key == "i_up");
    CHECK(sc.duration == 12.0);
    const Scenario def = scenario_from_tree(parse("[system]\npreset = test4\n"));
    CHECK(def.initial.L_g == 0.1e-3);
    CHECK(def.events.at(0).value == 1.5e-3);
    CHECK_THROWS_AS(scenario_from_tree(parse("[system]\n[events]\nL_g = 1\n")), config_error);
    CHECK_THROWS_AS(scenario_from_tree(parse("[system]\n[scenario]\nstep = 1e-3\n")), config_error);
}

TEST_CASE("bundled preset files load", "[config]") {
    for (const auto& name : preset_names()) {
        const std::string path = std::string(SOHB_SOURCE_DIR) + "/presets/" + name + ".cfg";
        INFO(path);
        const SystemParams p = load_params(path);
        CHECK(p.L_g == preset(name).L_g);
        CHECK_NOTHROW(load_scenario(path));
    }
}

TEST_CASE("golden tables", "[golden]") {
    const auto* t1 = golden::table_for("test1");
    REQUIRE(t1);
    CHECK(golden::lookup(*t1, "f_s", Part::Scalar, 0, 0, golden::Iter3) == 9.8926);
    CHECK(golden::lookup(*t1, "u_dc", Part::Re, 0, 1, golden::Iter3) == -31.3859);
    CHECK(golden::lookup(*t1, "u_dc", Part::Im, 0, 1, golden::Iter3) == 46.2193);
    CHECK(golden::lookup(*t1, "theta0", Part::Mag, 0, 0, golden::Iter3) == 0.1090);
    CHECK(golden::lookup(*t1, "u_ga", Part::Re, 1, 0, golden::Iter3) == 153.0042);
    CHECK_FALSE(golden::lookup(*t1, "f_s", Part::Scalar, 0, 0, golden::Iter0));
    const auto* t4 = golden::table_for("test4");
    REQUIRE(t4);
    CHECK(golden::lookup(*t4, "i_pp", Part::Mag, 0, 0, golden::Iter3) == 121.1716);
    CHECK(golden::lookup(*t4, "i_pp", Part::Mag, 0, 1, golden::Iter3) == 80.3491);
    CHECK(golden::lookup(*t4, "i_pp", Part::Ang, 0, 1, golden::Iter3) == -2.7766);
    CHECK(golden::lookup(*t4, "f_s", Part::Scalar, 0, 0, golden::Measured) == 8.8750);
    CHECK(golden::lookup(*golden::table_for("test2"), "f_s", Part::Scalar, 0, 0, golden::Iter3) == 9.8833);
    CHECK(golden::lookup(*golden::table_for("test3"), "f_s", Part::Scalar, 0, 0, golden::Iter3) == 8.8522);
    CHECK(golden::column_for_order(3) == golden::Iter3);
    CHECK(golden::column_for_order(0) == golden::Iter0);
    CHECK(golden::label({"u_ga", Part::Re, 1, -2, {}}) == "R(u_ga<1-2s>)");
}

TEST_CASE("signal set CSV round trip", "[io]") {
    const SystemParams p = preset("test1");
    SolveConfig cfg;
    cfg.order = 1;
    const SolveReport r = solve_so(p, cfg);
    REQUIRE(r.solution);
    const SignalSet s = solver_signals(*r.solution, p);
    std::stringstream buf;
    write_signal_set_csv(buf, s);
    const SignalSet back = read_signal_set_csv(buf);
    CHECK(back.fs == s.fs);
    CHECK(back.order == 1);
    for (const auto& [name, g] : s.spectra) {
        INFO(name);
        REQUIRE(back.has(name));
        CHECK(std::abs(back.spectra.at(name)(g.kind() == Kind::AC ? 1 : 0, 1) - g(g.kind() == Kind::AC ? 1 : 0, 1)) <
              1e-9 * std::max(1.0, std::abs(g(g.kind() == Kind::AC ? 1 : 0, 1))));
    }
    const SteadyState st = state_from_signals(back, false);
    CHECK(st.fs == s.fs);

    const auto rows = diff_sets(s, back, table_signals(), 0.05, 1e-9);
    for (const auto& row : rows) CHECK(row.pass);

    std::stringstream bad("# sohb-spectrum v2\n");
    CHECK_THROWS(read_signal_set_csv(bad));
}

TEST_CASE("gauge rotation is recovered by the fit", "[io]") {
    const SystemParams p = preset("test1");
    const SolveReport r = solve_so(p);
    REQUIRE(r.solution);
    const SignalSet s = solver_signals(*r.solution, p);
    const auto& t = *golden::table_for("test1");
    const double phi = fit_gauge(s, t, golden::Iter3);
    const double phi2 = fit_gauge(rotated(s, 0.8), t, golden::Iter3);
    CHECK_THAT(std::remainder(phi2 - (phi - 0.8), kTwoPi), WithinAbs(0.0, 1e-6));
}

TEST_CASE("solve report JSON is reproducible", "[io]") {
    const SystemParams p = preset("test1");
    SolveConfig cfg;
    cfg.order = 1;
    const auto a = solve_report_json(solve_so(p, cfg), p, 1).dump();
    const auto b = solve_report_json(solve_so(p, cfg), p, 1).dump();
    CHECK(a == b);
    const auto j = nlohmann::json::parse(a);
    CHECK(j["format"] == "sohb-solve v1");
    CHECK(j["trigger"] == "none");
    CHECK(j["equations"].size() == 1);
}

TEST_CASE("response CSV round trip and modes JSON", "[io]") {
    FrequencyResponse fr;
    fr.quantity = "Z_loop";
    for (double f = 0.0; f <= 100.0; f += 0.25) fr.push(f, cplx(0.0, kTwoPi * f) - cplx(-2.0, kTwoPi * 40.0));
    std::stringstream buf;
    write_response_csv(buf, fr);
    const FrequencyResponse back = read_response_csv(buf);
    CHECK(back.quantity == "Z_loop");
    REQUIRE(back.size() == fr.size());
    const auto modes = identify_modes(log_derivative(back));
    REQUIRE(modes.size() == 1);
    const auto j = modes_json(modes);
    CHECK(j["format"] == "sohb-modes v1");
    CHECK(j["modes"][0]["kind"] == "zero");
    CHECK(j["modes"][0]["damping"] == to_string(Damping::Positive));
    CHECK_THAT(j["modes"][0]["alpha"].get<double>(), WithinAbs(-2.0, 0.02));
}

TEST_CASE("manifest written before and after", "[io]") {
    const auto dir = std::filesystem::temp_directory_path() / "sohb_manifest_test";
    std::filesystem::remove_all(dir);
    RunManifest m("solve", "x.cfg", dir);
    m.set_params(preset("test1"));
    m.write();
    {
        std::ifstream is(dir / "manifest.json");
        CHECK(nlohmann::json::parse(is)["status"] == "running");
    }
    m.finalize(0);
    std::ifstream is(dir / "manifest.json");
    const auto j = nlohmann::json::parse(is);
    CHECK(j["status"] == "finished");
    CHECK(j["timings_s"].contains("total"));
    CHECK(j["parameters"]["L_g"] == 1e-3);
}
