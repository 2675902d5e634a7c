#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pulsefront/asymptotics.hpp"
#include "pulsefront/config.hpp"
#include "pulsefront/envelopes.hpp"
#include "pulsefront/errors.hpp"
#include "pulsefront/frontsim.hpp"
#include "pulsefront/io.hpp"
#include "pulsefront/medium.hpp"
#include "pulsefront/spectral.hpp"

namespace pulsefront::cli {

namespace fs = std::filesystem;

inline void finish_run(const fs::path& out, const std::string& subcommand, Config& cfg,
                       const std::vector<std::string>& inputs,
                       std::vector<std::string> outputs) {
    outputs.push_back("config.resolved.txt");
    outputs.push_back("manifest.json");
    write_text(out / "config.resolved.txt", cfg.serialize());
    write_json(out / "manifest.json", make_manifest(subcommand, cfg, inputs, outputs));
}

/// k(lambda) sweep plus the scalar spectral summary.
inline int run_spectrum(Config& cfg, const fs::path& out) {
    const auto spec = medium_from_config(cfg);
    const auto medium = make_medium(spec);
    const int n = cfg.get_int("grid", "n", 256);
    const int samples = cfg.get_int("analysis", "samples", 65);
    cfg.set("grid", "n", std::to_string(n));
    cfg.set("analysis", "samples", std::to_string(samples));

    const auto st = stability_exponents(medium, n);
    const auto c0 = compute_c0(medium, n);
    double lambda_max = cfg.get_double("analysis", "lambda_max", 2.5 * c0.lambda_at_c0);
    cfg.set("analysis", "lambda_max", format_double(lambda_max));

    CsvWriter csv(out / "spectrum.csv", {"lambda", "k", "minus_k_over_lambda"});
    for (int i = 0; i < samples; ++i) {
        const double lam = lambda_max * (i + 1) / samples;
        const double k = k_of_lambda(medium, n, lam).k;
        csv.row({lam, k, -k / lam});
    }
    json summary;
    summary["mu0"] = st.mu0;
    summary["mu1"] = st.mu1;
    summary["c0"] = c0.c0;
    summary["lambda_at_c0"] = c0.lambda_at_c0;
    summary["concavity_max_second_difference"] = c0.max_second_difference;
    write_json(out / "speed.json", summary);
    finish_run(out, "spectrum", cfg, {}, {"spectrum.csv", "speed.json"});
    return 0;
}

/// F_c for a given speed.
inline int run_roots(Config& cfg, const fs::path& out) {
    const auto spec = medium_from_config(cfg);
    const auto medium = make_medium(spec);
    const int n = cfg.get_int("grid", "n", 256);
    cfg.set("grid", "n", std::to_string(n));
    if (!cfg.has("roots", "c")) throw ConfigError("[roots] c is required");
    const double c = cfg.get_double("roots", "c", 0.0);
    cfg.set("roots", "c", format_double(c));

    const auto rs = dispersion_roots(medium, n, c);
    CsvWriter csv(out / "roots.csv", {"lambda", "dispersion_residual"});
    json j;
    j["c"] = c;
    j["tangent"] = rs.tangent;
    j["roots"] = json::array();
    for (double lam : rs.roots) {
        const double resid = k_of_lambda(medium, n, lam).k + c * lam;
        csv.row({lam, resid});
        j["roots"].push_back(lam);
    }
    write_json(out / "roots.json", j);
    finish_run(out, "roots", cfg, {}, {"roots.csv", "roots.json"});
    return 0;
}

inline json speed_to_json(const RelaxResult& res) {
    json j;
    j["c_hat"] = res.speed.c_hat;
    j["stderr"] = res.speed.stderr_;
    j["log_coeff"] = res.speed.log_coeff;
    j["frozen_speed"] = res.frozen_speed;
    j["final_drift"] = res.final_drift;
    j["fit_window"] = {res.speed.t_lo, res.speed.t_hi};
    return j;
}

/// Relax an initial datum to a pulsating front.
inline int run_simulate(Config& cfg, const fs::path& out) {
    const auto spec = medium_from_config(cfg);
    const auto medium = make_medium(spec);
    auto sim_cfg = sim_from_config(cfg);
    const auto datum = datum_from_config(cfg);

    const auto res = relax_to_front(medium, datum, sim_cfg);
    CsvWriter pos(out / "positions.csv", {"t", "x_front"});
    for (std::size_t i = 0; i < res.pos_t.size(); ++i) pos.row({res.pos_t[i], res.pos_x[i]});
    write_profile(out, res.profile);
    write_json(out / "speed.json", speed_to_json(res));
    finish_run(out, "simulate", cfg, {},
               {"positions.csv", "profile.csv", "profile.json", "speed.json"});
    return 0;
}

/// Tail analysis of a stored profile: log slope, decay fit, classification.
inline int run_decay(Config& cfg, const fs::path& out, const fs::path& run_dir) {
    Config sim_cfg = Config::parse_file((run_dir / "config.resolved.txt").string());
    const auto spec = medium_from_config(sim_cfg);
    const auto medium = make_medium(spec);
    const auto profile = read_profile(run_dir);
    const int n = cfg.get_int("grid", "n", 256);
    const double band_lo = cfg.get_double("analysis", "band_lo", 1e-8);
    const double band_hi = cfg.get_double("analysis", "band_hi", 1e-3);
    const double threshold = cfg.get_double("analysis", "classify_threshold", 0.005);
    cfg.set("grid", "n", std::to_string(n));
    cfg.set("analysis", "band_lo", format_double(band_lo));
    cfg.set("analysis", "band_hi", format_double(band_hi));
    cfg.set("analysis", "classify_threshold", format_double(threshold));

    const auto c0 = compute_c0(medium, n);
    const auto roots = dispersion_roots(medium, n, profile.c);
    std::vector<DispersionSample> cands;
    for (double lam : roots.roots) cands.push_back(k_of_lambda(medium, n, lam));

    const auto ls = log_slope(profile);
    CsvWriter lcsv(out / "logslope.csv", {"s", "lambda_of_s"});
    for (std::size_t i = 0; i < ls.s.size(); ++i) lcsv.row({ls.s[i], ls.lambda[i]});

    json j;
    j["c_star"] = profile.c;
    j["c0"] = c0.c0;
    j["roots"] = roots.roots;
    j["tangent"] = roots.tangent;
    DecayFit fit;
    bool have_fit = false;
    std::string fit_error;
    if (!cands.empty()) {
        try {
            fit = fit_tail(profile, cands, band_lo, band_hi);
            have_fit = true;
        } catch (const Error& e) {
            fit_error = e.what();
        }
    }
    if (have_fit) {
        j["lambda_hat"] = fit.lambda_hat;
        j["B_hat"] = fit.B_hat;
        j["modulation_cv"] = fit.modulation_cv;
        j["candidate_rates"] = fit.candidate_rates;
        j["candidate_cv"] = fit.candidate_cv;
        j["winner_rate"] = fit.winner_rate;
    } else {
        j["fit_error"] = fit_error;
    }
    const auto cls = classify(profile.c, c0.c0, have_fit ? &fit : nullptr, roots, threshold);
    j["verdict"] = to_string(cls.verdict);
    j["margin"] = cls.margin;
    j["decay_matches"] = cls.decay_matches;
    j["notes"] = cls.notes;
    write_json(out / "decay.json", j);
    finish_run(out, "decay", cfg,
               {(run_dir / "profile.csv").string(), (run_dir / "speed.json").string()},
               {"decay.json", "logslope.csv"});
    return 0;
}

/// Stability-with-shift experiment: relax the front, build the drifting
/// envelope, run the Cauchy datum, check the sandwich and fit the shift.
inline int run_stability(Config& cfg, const fs::path& out) {
    const auto spec = medium_from_config(cfg);
    const auto medium = make_medium(spec);
    auto sim_cfg = sim_from_config(cfg);
    const int n = cfg.get_int("grid", "n", 256);
    const double r_datum = cfg.get_double("stability", "r", 1.0);
    const double t_run = cfg.get_double("stability", "t_run", 60.0);
    const double eps_grid = cfg.get_double("stability", "eps_grid", 1e-6);
    cfg.set("grid", "n", std::to_string(n));
    cfg.set("stability", "r", format_double(r_datum));
    cfg.set("stability", "t_run", format_double(t_run));
    cfg.set("stability", "eps_grid", format_double(eps_grid));

    InitialDatum base_datum;
    base_datum.kind = InitialDatum::Kind::step;
    base_datum.x0 = 0.3 * sim_cfg.window;
    const auto base = relax_to_front(medium, base_datum, sim_cfg);

    const auto holder = holder_constants(medium);
    const auto bundle = make_spectral_bundle(medium, n, base.speed.c_hat, holder);
    const auto env = build_stability_envelope(base.profile, medium, bundle, r_datum);

    SimConfig run_cfg = sim_cfg;
    run_cfg.store_interval = run_cfg.store_interval > 0.0 ? run_cfg.store_interval : 2.0;
    Simulator sim(medium, run_cfg);
    InitialDatum cauchy;
    cauchy.kind = InitialDatum::Kind::exp_tail;
    cauchy.rate = r_datum;
    cauchy.x0 = 0.3 * run_cfg.window;
    sim.set_datum(cauchy);
    Trajectory traj;
    double next_store = 0.0;
    while (sim.state().t < t_run) {
        if (sim.state().t >= next_store) {
            traj.push_back({sim.state().t, sim.state().x_offset, sim.state().u});
            next_store += run_cfg.store_interval;
        }
        sim.step();
        if (sim.needs_recenter()) sim.recenter();
    }
    traj.push_back({sim.state().t, sim.state().x_offset, sim.state().u});

    const auto [erep, srep] = check_envelope(env, traj, run_cfg.h, eps_grid);

    CsvWriter ecsv(out / "envelope.csv", {"t", "width", "residual", "tau_hat"});
    for (std::size_t i = 0; i < srep.times.size(); ++i) {
        double width = 0.0;
        for (std::size_t k = 0; k < erep.times.size(); ++k)
            if (std::abs(erep.times[k] - srep.times[i]) < 1e-9) width = erep.widths[k];
        ecsv.row({srep.times[i], width, srep.residual_history[i], srep.tau_history[i]});
    }
    json j;
    j["tau_hat"] = srep.tau_hat;
    j["converged"] = srep.converged;
    j["final_residual"] = srep.residual_history.back();
    j["sigma0"] = erep.sigma0;
    j["lambda"] = env.lambda;
    j["eta"] = env.eta;
    j["rho"] = env.rho;
    j["omega"] = env.omega;
    j["eps0"] = env.eps0;
    j["min_margin_lower"] = erep.min_margin_lower;
    j["min_margin_upper"] = erep.min_margin_upper;
    j["base_speed"] = base.speed.c_hat;
    write_json(out / "stability.json", j);
    finish_run(out, "stability", cfg, {}, {"envelope.csv", "stability.json"});
    return 0;
}

/// Ladder certificates (and the tail sandwich when a profile is measured).
inline int run_certify(Config& cfg, const fs::path& out) {
    const auto spec = medium_from_config(cfg);
    const auto medium = make_medium(spec);
    const int n = cfg.get_int("grid", "n", 256);
    const int n_max = cfg.get_int("certify", "n_max", 5);
    const double h = cfg.get_double("certify", "h", 1.0 / 512.0);
    double c_star = cfg.get_double("certify", "c_star", 0.0);
    const bool with_profile = cfg.get_int("certify", "sandwich", 1) != 0;
    cfg.set("grid", "n", std::to_string(n));
    cfg.set("certify", "n_max", std::to_string(n_max));
    cfg.set("certify", "h", format_double(h));
    cfg.set("certify", "sandwich", with_profile ? "1" : "0");

    RelaxResult base;
    bool have_profile = false;
    if (c_star <= 0.0 || with_profile) {
        auto sim_cfg = sim_from_config(cfg);
        InitialDatum d;
        d.kind = InitialDatum::Kind::step;
        d.x0 = 0.3 * sim_cfg.window;
        base = relax_to_front(medium, d, sim_cfg);
        have_profile = true;
        if (c_star <= 0.0) c_star = base.speed.c_hat;
    }
    cfg.set("certify", "c_star", format_double(c_star));

    const auto holder = holder_constants(medium);
    const auto bundle = make_spectral_bundle(medium, n, c_star, holder);
    LadderConditionReport urep, lrep;
    const auto up = build_upper_ladder(bundle, n_max, &urep);
    const auto lo = build_lower_ladder(bundle, n_max, &lrep);
    const auto repu = check_ladder(up, medium, up.sigma_n(n_max) + 4.0, h);
    const auto repl = check_ladder(lo, medium, lo.sigma_n(n_max) + 4.0, h);

    json j;
    j["c_star"] = c_star;
    j["lambda_star"] = bundle.lambda_star;
    j["lambda_star_plus"] = bundle.lambda_star_plus;
    j["r"] = bundle.r;
    j["gap_r"] = bundle.gap_r();
    j["holder"] = {{"alpha", bundle.holder.alpha},
                   {"delta", bundle.holder.delta},
                   {"gamma", bundle.holder.gamma}};
    auto rung_json = [](const LadderReport& rep, const Ladder& lad) {
        json arr = json::array();
        for (const auto& c : rep.rungs) {
            json r;
            r["n"] = c.n;
            r["s_lo"] = c.s_lo;
            r["s_hi"] = c.s_hi;
            r["min_residual"] = c.min_residual;
            r["max_residual"] = c.max_residual;
            r["eps_grid"] = c.eps_grid;
            r["theta"] = c.theta;
            r["theta_tilde"] = c.theta_tilde;
            r["coeff_sum"] = c.coeff_sum;
            arr.push_back(r);
        }
        json out_j;
        out_j["sigma0"] = lad.sigma0;
        out_j["sigma"] = lad.sigma;
        out_j["rungs"] = arr;
        out_j["monotone"] = rep.monotone;
        out_j["monotone_worst"] = rep.monotone_worst;
        return out_j;
    };
    j["upper"] = rung_json(repu, up);
    j["lower"] = rung_json(repl, lo);
    j["upper"]["B_bar"] = up.B_bar();
    j["lower"]["B_lower"] = lo.B_lower();
    if (have_profile) {
        const auto sw = check_sandwich(base.profile, up, lo);
        j["sandwich"] = {{"tau_upper", sw.tau_upper},
                         {"margin_upper", sw.margin_upper},
                         {"eta_lower", sw.eta_lower},
                         {"margin_lower", sw.margin_lower}};
    }
    write_json(out / "certificate.json", j);
    finish_run(out, "certify", cfg, {}, {"certificate.json"});
    return 0;
}

/// Aggregate the JSON artifacts of earlier runs into one report.
inline int run_report(Config& cfg, const fs::path& out, const std::vector<fs::path>& runs) {
    json agg;
    json index = json::array();
    for (const auto& dir : runs) {
        json entry;
        entry["run"] = dir.string();
        std::ifstream m(dir / "manifest.json");
        if (!m) throw ConfigError("run '" + dir.string() + "' has no manifest.json");
        json manifest = json::parse(m);
        entry["subcommand"] = manifest.at("subcommand");
        for (const auto& name : manifest.at("outputs")) {
            const fs::path p = dir / name.get<std::string>();
            if (!fs::exists(p))
                throw ConfigError("manifest lists missing file '" + p.string() + "'");
            if (p.extension() == ".json" && p.filename() != "manifest.json") {
                std::ifstream in(p);
                entry[p.stem().string()] = json::parse(in);
            }
        }
        agg[dir.filename().string()] = entry;
        index.push_back(dir.string());
    }
    json j;
    j["runs"] = agg;
    j["index"] = index;
    write_json(out / "report.json", j);
    CsvWriter csv(out / "bundle.csv", {"run_index", "artifact_count"});
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::size_t count = 0;
        for (auto it = fs::directory_iterator(runs[i]); it != fs::directory_iterator(); ++it)
            ++count;
        csv.row({static_cast<double>(i), static_cast<double>(count)});
    }
    finish_run(out, "report", cfg, {}, {"report.json", "bundle.csv"});
    return 0;
}

} // namespace pulsefront::cli
