// Scenario runner: exact, ode, solve, verify, slide and batch subcommands.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "heuler/heuler.hpp"
#include "heuler/scenario.hpp"

namespace fs = std::filesystem;
using namespace heuler;

namespace {

struct Overrides {
    std::optional<std::string> out;
    std::optional<int> seed;
    std::optional<double> tol;
};

Scenario load_with(const std::string& path, const Overrides& ov) {
    Scenario sc = load_scenario(path);
    if (ov.out) sc.out_dir = *ov.out;
    if (ov.seed) {
        if (*ov.seed < 0) throw Error(ErrorKind::ConfigError, "--seed must be non-negative");
        sc.seed = static_cast<std::uint64_t>(*ov.seed);
    }
    if (ov.tol) {
        if (!(*ov.tol > 0.0)) throw Error(ErrorKind::ConfigError, "--tol must be positive");
        sc.tol = *ov.tol;
    }
    return sc;
}

void print_outcome(const Scenario& sc, const ScenarioOutcome& out) {
    const auto& checks = out.report.checks();
    const auto failed = std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; });
    std::cout << sc.name << " [" << to_string(sc.tag) << "] " << (out.code == ExitCode::Pass ? "PASS" : "FAIL")
              << " checks=" << checks.size() << " failed=" << failed << " exit=" << static_cast<int>(out.code)
              << " report=" << (sc.out_dir / "report.json").string() << '\n';
    for (const auto& c : checks) {
        if (!c.passed) {
            std::cout << "  failed: " << c.name << " value=" << io::format_double(c.value) << ' ' << c.relation << ' '
                      << io::format_double(c.bound) << '\n';
        }
    }
    if (!out.message.empty()) std::cout << "  error: " << out.message << '\n';
}

int run_one(const std::string& path, const Overrides& ov, std::initializer_list<TheoremCase> allowed,
            const char* cmd) {
    Scenario sc;
    try {
        sc = load_with(path, ov);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(ExitCode::ConfigError);
    }
    if (allowed.size() > 0 && std::find(allowed.begin(), allowed.end(), sc.tag) == allowed.end()) {
        std::cerr << "config error: " << path << ": scenario.tag: '" << to_string(sc.tag) << "' is not handled by '"
                  << cmd << "'\n";
        return static_cast<int>(ExitCode::ConfigError);
    }
    const auto out = run_scenario(sc);
    print_outcome(sc, out);
    return static_cast<int>(out.code);
}

int write_report(const fs::path& dir, ScenarioReport& rep) {
    fs::create_directories(dir);
    auto f = io::open_for_write(dir / "report.json");
    f << rep.to_json().dump(2) << '\n';
    return static_cast<int>(rep.passed() ? ExitCode::Pass : ExitCode::AssertionFail);
}

ScalarField read_any_field(const std::string& path) {
    if (fs::path(path).extension() == ".bin") return read_field_binary(path);
    return read_field_csv(path);
}

int run_verify(const std::string& psi_path, const std::string& lap_path, const std::string& vel_path,
               std::optional<double> alpha, const std::string& out) {
    ScenarioReport rep;
    rep.data()["inputs"] = {{"psi", psi_path}, {"laplacian", lap_path}, {"velocity", vel_path}};
    if (!psi_path.empty()) {
        const auto psi = read_any_field(psi_path);
        const auto lap = lap_path.empty() ? laplacian_polar(psi) : read_any_field(lap_path);
        require_same_grid(psi.grid, lap.grid);
        const auto rec = recover_g(psi, lap);
        fs::create_directories(out);
        rec.write_csv(fs::path(out) / "g_recovery.csv");
        rep.data()["g_recovery"] = rec.to_json();
        rep.require("single_valued_defect", rec.single_valued_defect, "<=", kFitDefectThreshold);
        const auto jac = jacobian_check(lap, psi);
        rep.data()["jacobian"] = jac.to_json();
        rep.require("jacobian_normalized", jac.normalized_max, "<=", 1e-4);
    }
    if (!vel_path.empty()) {
        const auto u = read_velocity_csv(vel_path);
        const auto hf = homogeneity_fit(u);
        rep.data()["homogeneity"] = hf.to_json();
        if (alpha) rep.require("alpha_hat_error", std::abs(hf.alpha_hat - *alpha), "<=", 1e-3);
        rep.require("homogeneity_deviation", hf.deviation, "<=", 1e-3);
        if (alpha) {
            const auto br = boundary_report(u, *alpha);
            rep.data()["boundary_report"] = br.to_json();
        }
    }
    return write_report(out, rep);
}

int run_slide(const std::string& psi_path, std::pair<double, double> xi, const std::vector<double>& taus,
              const std::string& out) {
    ScenarioReport rep;
    const auto psi = read_any_field(psi_path);
    const auto sr = sliding_check(psi, xi, taus);
    rep.data()["sliding"] = sr.to_json();
    rep.data()["xi"] = {xi.first, xi.second};
    rep.require("min_w", sr.min_w, ">=", 0.0);
    return write_report(out, rep);
}

int run_batch(const std::vector<std::string>& paths, const Overrides& ov, int jobs) {
    std::vector<Scenario> scs;
    for (const auto& p : paths) {
        try {
            scs.push_back(load_scenario(p));
        } catch (const Error& e) {
            std::cerr << e.what() << '\n';
            return static_cast<int>(ExitCode::ConfigError);
        }
        if (ov.out) scs.back().out_dir = fs::path(*ov.out) / scs.back().name;
        if (ov.seed) scs.back().seed = static_cast<std::uint64_t>(std::max(0, *ov.seed));
        if (ov.tol) scs.back().tol = *ov.tol;
    }
    for (std::size_t a = 0; a < scs.size(); ++a) {
        for (std::size_t b = a + 1; b < scs.size(); ++b) {
            if (fs::weakly_canonical(scs[a].out_dir) == fs::weakly_canonical(scs[b].out_dir)) {
                std::cerr << "config error: scenarios '" << scs[a].name << "' and '" << scs[b].name
                          << "' share an output directory\n";
                return static_cast<int>(ExitCode::ConfigError);
            }
        }
    }
    std::vector<ScenarioOutcome> outs(scs.size());
    std::size_t next = 0;
    std::mutex m;
    auto worker = [&]() {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard lock(m);
                if (next == scs.size()) return;
                k = next++;
            }
            outs[k] = run_scenario(scs[k]);
        }
    };
    const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(scs.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int code = 0;
    for (std::size_t k = 0; k < scs.size(); ++k) {
        print_outcome(scs[k], outs[k]);
        code = std::max(code, static_cast<int>(outs[k].code));
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homogeneous stationary Euler flows on sectors: exact families, solves and certification"};
    app.require_subcommand(1);

    Overrides ov;
    std::string config;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config, "scenario file (YAML or JSON)")->check(CLI::ExistingFile);
        if (needs_config) opt->required();
        sub->add_option("--out", ov.out, "output directory");
        sub->add_option("--seed", ov.seed, "perturbation seed");
        sub->add_option("--tol", ov.tol, "Newton tolerance");
    };

    auto* exact = app.add_subcommand("exact", "exact family construction and residuals");
    add_common(exact, true);
    auto* ode = app.add_subcommand("ode", "angular ODE integration and periodic shooting");
    add_common(ode, true);
    auto* solve = app.add_subcommand("solve", "semilinear elliptic scenario with certification");
    add_common(solve, true);

    auto* verify = app.add_subcommand("verify", "certification on supplied field files");
    std::string psi_path, lap_path, vel_path, out_dir = "out/verify";
    std::optional<double> alpha;
    verify->add_option("--psi", psi_path, "stream function field (CSV or .bin)")->check(CLI::ExistingFile);
    verify->add_option("--laplacian", lap_path, "Laplacian field; computed from psi when absent")->check(CLI::ExistingFile);
    verify->add_option("--velocity", vel_path, "velocity CSV (s,theta,ur,utheta)")->check(CLI::ExistingFile);
    verify->add_option("--alpha", alpha, "expected homogeneity degree");
    verify->add_option("--out", out_dir, "output directory");

    auto* slide = app.add_subcommand("slide", "sliding check on a working-frame field");
    std::string slide_psi, slide_out = "out/slide";
    std::vector<double> xi{1.0, 1.0};
    std::vector<double> taus{0.1};
    slide->add_option("--psi", slide_psi, "working-frame field (CSV or .bin)")->required()->check(CLI::ExistingFile);
    slide->add_option("--xi", xi, "direction xi1 xi2 (xi2 > 0)")->expected(2);
    slide->add_option("--tau", taus, "shift sizes")->expected(1, 1000);
    slide->add_option("--out", slide_out, "output directory");

    auto* batch = app.add_subcommand("batch", "run several scenarios concurrently");
    std::vector<std::string> batch_paths;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    batch->add_option("configs", batch_paths, "scenario files")->required()->check(CLI::ExistingFile);
    batch->add_option("--out", ov.out, "root directory; each scenario writes into <out>/<name>");
    batch->add_option("--seed", ov.seed, "perturbation seed for every scenario");
    batch->add_option("--tol", ov.tol, "Newton tolerance for every scenario");
    batch->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
    }

    try {
        if (*exact) return run_one(config, ov, {TheoremCase::AppendixAtlas}, "exact");
        if (*ode) return run_one(config, ov, {TheoremCase::Cor1}, "ode");
        if (*solve) {
            return run_one(config, ov,
                           {TheoremCase::Thm1i, TheoremCase::Thm1ii, TheoremCase::Thm2_A1, TheoremCase::Thm2_A2,
                            TheoremCase::Thm2_A3, TheoremCase::Thm2_A4, TheoremCase::Thm3, TheoremCase::Thm4_B1,
                            TheoremCase::Thm4_B2, TheoremCase::Thm4_B3, TheoremCase::Thm4_B4, TheoremCase::Thm5i,
                            TheoremCase::Thm5ii},
                           "solve");
        }
        if (*verify) {
            if (psi_path.empty() && vel_path.empty()) {
                std::cerr << "config error: verify needs --psi or --velocity\n";
                return static_cast<int>(ExitCode::ConfigError);
            }
            const int rc = run_verify(psi_path, lap_path, vel_path, alpha, out_dir);
            std::cout << "verify " << (rc == 0 ? "PASS" : "FAIL") << " report=" << (fs::path(out_dir) / "report.json").string() << '\n';
            return rc;
        }
        if (*slide) {
            const int rc = run_slide(slide_psi, {xi[0], xi[1]}, taus, slide_out);
            std::cout << "slide " << (rc == 0 ? "PASS" : "FAIL") << " report=" << (fs::path(slide_out) / "report.json").string() << '\n';
            return rc;
        }
        if (*batch) return run_batch(batch_paths, ov, jobs);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(e.kind() == ErrorKind::ConfigError ? ExitCode::ConfigError : ExitCode::NumericalFailure);
    } catch (const std::exception& e) {
        std::cerr << "PipelineFailure: " << e.what() << '\n';
        return static_cast<int>(ExitCode::NumericalFailure);
    }
    return 0;
}
