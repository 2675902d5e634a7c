#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pulsefront/cli.hpp"

namespace fs = std::filesystem;
using namespace pulsefront;

namespace {

int dispatch(const std::string& sub, const std::string& config_path, const fs::path& out,
             const std::string& run_dir, const std::vector<std::string>& runs) {
    fs::create_directories(out);
    Config cfg = config_path.empty() ? Config() : Config::parse_file(config_path);
    if (sub == "spectrum") return cli::run_spectrum(cfg, out);
    if (sub == "roots") return cli::run_roots(cfg, out);
    if (sub == "simulate") return cli::run_simulate(cfg, out);
    if (sub == "decay") {
        if (run_dir.empty()) throw ConfigError("decay needs --run <simulate run dir>");
        return cli::run_decay(cfg, out, run_dir);
    }
    if (sub == "stability") return cli::run_stability(cfg, out);
    if (sub == "certify") return cli::run_certify(cfg, out);
    if (sub == "report") {
        std::vector<fs::path> rs(runs.begin(), runs.end());
        if (rs.empty()) throw ConfigError("report needs at least one --run");
        return cli::run_report(cfg, out, rs);
    }
    throw ConfigError("unknown subcommand '" + sub + "'");
}

int exit_code_for(const Error& e) {
    return e.kind() == "ConfigError" ? 1 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pulsefront: dispersion analysis, front relaxation and comparison-function "
                 "certificates for periodic reaction-diffusion-advection media"};
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out_dir = "runs";
    std::string run_dir;
    std::vector<std::string> runs;
    int jobs = 1;

    const std::vector<std::string> names = {"spectrum", "roots",   "simulate", "decay",
                                            "stability", "certify", "report"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config,-c", configs, "config file(s); several fan out as a sweep");
        sub->add_option("--out,-o", out_dir, "output directory");
        sub->add_option("--jobs,-j", jobs, "parallel sweep entries");
        if (name == "decay") sub->add_option("--run", run_dir, "simulate run directory");
        if (name == "report") sub->add_option("--run", runs, "run directories to aggregate");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    if (const char* env = std::getenv("PULSEFRONT_JOBS")) jobs = std::max(1, std::atoi(env));

    try {
        if (configs.size() <= 1) {
            const std::string cfg = configs.empty() ? "" : configs.front();
            return dispatch(sub, cfg, out_dir, run_dir, runs);
        }
        // Sweep: each config runs into out/<stem>/.
        std::vector<std::future<int>> futs;
        std::vector<int> codes(configs.size(), 0);
        std::size_t next = 0;
        while (next < configs.size()) {
            futs.clear();
            const std::size_t batch = std::min<std::size_t>(jobs, configs.size() - next);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t idx = next + b;
                futs.push_back(std::async(std::launch::async, [&, idx]() {
                    const fs::path out = fs::path(out_dir) / fs::path(configs[idx]).stem();
                    return dispatch(sub, configs[idx], out, run_dir, runs);
                }));
            }
            for (std::size_t b = 0; b < batch; ++b) codes[next + b] = futs[b].get();
            next += batch;
        }
        for (int c : codes)
            if (c != 0) return c;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
