// ============================================================================
// compasskit command-line interface.
//
//   compasskit run <config.json> [--out dir] [--threads n]
//   compasskit sweep <template.json> --axis L=2,3,4 --axis ratio=0.1,0.5
//                    [--out dir] [--threads n]
//
// `run` executes one task and prints its RunRecord as deterministic JSON on
// stdout; with --out it also writes result.json plus any per-task CSV.
// `sweep` expands the cartesian product of the axes over the template config,
// executes every point (worker pool of --threads, results in input order),
// prints the aggregate CSV, and with --out writes sweep.csv, sweep.json and
// one record per point.  The process exit code follows the documented
// contract: 0 pass, 1 verdict failure, 2 config error, 3 budget exceeded,
// 4 internal error.
// ============================================================================

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compasskit/runner.hpp"

namespace fs = std::filesystem;
using namespace compasskit;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

// Best effort: tell the BLAS backend how many threads it may use.  Must be
// exported before the first BLAS call; harmless when the variable is ignored.
void set_thread_env(int threads) {
    const std::string n = std::to_string(threads);
    setenv("OPENBLAS_NUM_THREADS", n.c_str(), 1);
    setenv("OMP_NUM_THREADS", n.c_str(), 1);
}

int do_run(const std::string& config_path, const std::string& out_dir) {
    std::string raw;
    try {
        raw = slurp(config_path);
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    }
    auto result = runner::run_task_text(raw);
    std::cout << result.record.dump() << "\n";
    if (!out_dir.empty()) {
        try {
            write_file(fs::path(out_dir) / "result.json", result.record.dump() + "\n");
            for (const auto& [name, content] : result.files)
                write_file(fs::path(out_dir) / name, content);
        } catch (const std::exception& ex) {
            std::cerr << "output error: " << ex.what() << "\n";
            return 4;
        }
    }
    return result.exit_code;
}

int do_sweep(const std::string& template_path, const std::vector<std::string>& axis_args,
             const std::string& out_dir, int threads) {
    nlohmann::json templ;
    std::vector<runner::SweepAxis> axes;
    try {
        templ = nlohmann::json::parse(slurp(template_path));
        for (const auto& a : axis_args) axes.push_back(runner::parse_axis(a));
    } catch (const std::exception& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    }

    runner::SweepResult sw;
    try {
        sw = runner::run_sweep(templ, axes, threads);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "internal error: " << ex.what() << "\n";
        return 4;
    }

    std::cout << sw.csv;
    if (!out_dir.empty()) {
        try {
            write_file(fs::path(out_dir) / "sweep.csv", sw.csv);
            write_file(fs::path(out_dir) / "sweep.json", sw.aggregate.dump() + "\n");
            for (std::size_t i = 0; i < sw.points.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "point_%03zu.json", i);
                write_file(fs::path(out_dir) / name,
                           sw.points[i].result.record.dump() + "\n");
            }
        } catch (const std::exception& ex) {
            std::cerr << "output error: " << ex.what() << "\n";
            return 4;
        }
    }
    return sw.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compasskit: compass-model degeneracy certificates and "
                 "sector-resolved exact diagonalization"};
    app.set_version_flag("--version",
                         std::string(runner::kToolName) + " " + runner::kToolVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 1;

    auto* run = app.add_subcommand("run", "execute one task from a JSON config");
    run->add_option("config", config_path, "path to the config JSON")->required();
    run->add_option("--out", out_dir, "directory for result.json and CSV artifacts");
    run->add_option("--threads", threads, "BLAS thread budget")->check(CLI::PositiveNumber);

    std::string template_path, sweep_out;
    std::vector<std::string> axis_args;
    int sweep_threads = 1;

    auto* sweep = app.add_subcommand("sweep", "cartesian-product sweep over axis lists");
    sweep->add_option("template", template_path, "path to the template config JSON")
        ->required();
    sweep->add_option("--axis", axis_args, "axis as key=v1,v2,... (repeatable)")
        ->required();
    sweep->add_option("--out", sweep_out, "directory for sweep.csv/sweep.json/records");
    sweep->add_option("--threads", sweep_threads, "worker pool size")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        set_thread_env(threads);
        return do_run(config_path, out_dir);
    }
    set_thread_env(1);  // one BLAS thread per worker
    return do_sweep(template_path, axis_args, sweep_out, sweep_threads);
}
