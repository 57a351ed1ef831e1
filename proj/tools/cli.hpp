#pragma once

#include "sbf/sbf.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sbf::cli {

struct Sink {
    std::ostream& out;

    // Writes to path when given, else to the stream.
    void emit(const std::string& path, const std::string& text) const
    {
        if (path.empty())
            out << text;
        else
            write_file_atomic(path, text);
    }
};

struct KernelFlags {
    KernelSpec spec;
    int n = 2;

    void attach(CLI::App* sub)
    {
        sub->add_option("--family,--kernel", spec.family, "green|tps|wendland|gaussian|multiquadric|generating|poisson")
            ->required();
        sub->add_option("--n", n, "sphere dimension");
        sub->add_option("--beta", spec.beta, "Green order");
        sub->add_option("--s", spec.s, "thin-plate exponent");
        sub->add_option("--sigma", spec.sigma, "Gaussian width");
        sub->add_option("--delta", spec.delta, "multiquadric shape");
        sub->add_option("--w", spec.w, "generating parameter");
        sub->add_option("--d", spec.d, "Wendland dimension");
        sub->add_option("--k", spec.k, "Wendland smoothness");
        sub->add_option("--t0", spec.t0, "Wendland support edge");
        sub->add_option("--lmax", spec.lmax, "largest stored degree");
    }
};

struct CenterFlags {
    std::string file;
    std::string gen = "fibonacci";
    int N = 100;
    std::uint64_t seed = 1;

    void attach(CLI::App* sub)
    {
        sub->add_option("--centers,--centers-file", file, "centers text file (n N header, then coordinates)");
        sub->add_option("--gen", gen, "fibonacci|hammersley|random|equispaced");
        sub->add_option("--N", N, "number of generated centers");
        sub->add_option("--seed", seed, "seed for random generators");
    }

    CenterSet load(int& n) const
    {
        if (!file.empty()) {
            int fn = 0;
            const Mat P = read_centers_file(file, fn);
            require(fn == n || n == 0, "centers file dimension differs from --n");
            n = fn;
            return analyze_centers(fn, P);
        }
        require(N >= 2, "--N must be at least 2");
        return analyze_centers(n, generate_points(gen, n, N, seed));
    }

    std::string source() const { return file.empty() ? "generated:" + gen + ":" + std::to_string(N) : file; }
};

// Experiment options: a config file plus per-key overrides.
struct ExperimentFlags {
    std::string config;
    std::string json_path, csv_path;
    ConfigMap overrides;
    std::vector<std::pair<std::string, std::string*>> slots;
    std::vector<std::unique_ptr<std::string>> storage;

    void attach(CLI::App* sub)
    {
        sub->add_option("--config", config, "TOML-style key = value file");
        sub->add_option("--json", json_path, "JSON report path (default: stdout)");
        sub->add_option("--csv", csv_path, "CSV table path");
        static const char* keys[] = {"family", "beta", "s", "sigma", "delta", "w", "d", "k", "t0", "lmax", "n",
                                     "target", "target_s", "bump_sigma", "target_delta", "target_degree",
                                     "target_lmax", "centers", "base_N", "levels", "rho_cap", "p", "gamma",
                                     "threshold", "max_rule_degree", "draws", "search_budget",
                                     "projection_max_N", "nu_grid", "r_grid", "tau", "seed"};
        for (const char* k : keys) {
            std::string flag = std::string("--") + k;
            for (auto& ch : flag)
                if (ch == '_')
                    ch = '-';
            storage.push_back(std::make_unique<std::string>());
            sub->add_option(flag, *storage.back(), std::string("overrides config key ") + k);
            slots.emplace_back(k, storage.back().get());
        }
    }

    ExperimentConfig resolve(CLI::App* sub) const
    {
        ExperimentConfig cfg;
        if (!config.empty())
            apply_config(cfg, load_config(config));
        ConfigMap o;
        for (const auto& [k, p] : slots) {
            std::string flag = "--" + k;
            for (auto& ch : flag)
                if (ch == '_')
                    ch = '-';
            if (sub->count(flag) > 0)
                o[k] = *p;
        }
        apply_config(cfg, o);
        return cfg;
    }
};

inline std::string level_csv(const ojson& rep, const std::vector<std::string>& cols)
{
    CsvTable t(cols);
    for (const auto& L : rep["levels"]) {
        std::vector<std::string> row;
        for (const auto& c : cols) {
            if (!L.contains(c) || L[c].is_null())
                row.push_back("");
            else if (L[c].is_number_float())
                row.push_back(fmt17(L[c].get<double>()));
            else if (L[c].is_string())
                row.push_back(L[c].get<std::string>());
            else
                row.push_back(L[c].dump());
        }
        t.add(row);
    }
    return t.str();
}

inline Target cli_target(const std::string& name, int n, double s, double sigma, double delta, int degree, int lmax)
{
    if (name == "bump")
        return target_bump(n, sigma, std::min(lmax, 256));
    if (name == "green_bump")
        return target_green_bump(n, s, sigma, std::min(lmax, 256));
    if (name == "green_peaked")
        return target_green_peaked(n, s, delta, lmax);
    if (name == "polynomial")
        return target_polynomial(n, degree);
    throw std::invalid_argument("unknown target " + name);
}

inline ojson network_json(const KernelSpec& ks, const std::string& centers, const Vec& a)
{
    ojson j;
    j["family_tag"] = ks.family;
    j["params"] = ks.to_json();
    j["centers_file"] = centers;
    j["coeffs"] = std::vector<double>(a.data(), a.data() + a.size());
    return j;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Spherical basis function networks: kernels, quadrature, frames and rate experiments", "sbf"};
    app.require_subcommand(1);
    const Sink sink{out};

    // coeffs
    auto* c_coeffs = app.add_subcommand("coeffs", "Fourier-Legendre coefficients as CSV (l,coeff)");
    KernelFlags coeffs_k;
    std::string coeffs_out;
    coeffs_k.attach(c_coeffs);
    c_coeffs->add_option("--out", coeffs_out, "CSV path (default: stdout)");

    // centers
    auto* c_centers = app.add_subcommand("centers", "Generate and analyze center sets");
    CenterFlags centers_c;
    int centers_n = 2, centers_levels = 0;
    double centers_rho = 2.5;
    std::string centers_out, centers_json;
    centers_c.attach(c_centers);
    c_centers->add_option("--n", centers_n, "sphere dimension");
    c_centers->add_option("--levels", centers_levels, "nested refinements");
    c_centers->add_option("--rho-cap", centers_rho, "mesh ratio cap for refinement");
    c_centers->add_option("--out", centers_out, "write the finest set to this file");
    c_centers->add_option("--json", centers_json, "JSON report path (default: stdout)");

    // quadrature
    auto* c_quad = app.add_subcommand("quadrature", "Positive-weight rule exact on Pi_L");
    CenterFlags quad_c;
    int quad_n = 2, quad_L = -1;
    double quad_thr = default_feasibility_threshold;
    bool quad_backoff = false;
    std::string quad_out, quad_json;
    quad_c.attach(c_quad);
    c_quad->add_option("--n", quad_n, "sphere dimension");
    c_quad->add_option("--degree,--L", quad_L, "exactness degree")->required();
    c_quad->add_option("--threshold", quad_thr, "feasibility threshold on h(L+lambda)");
    c_quad->add_flag("--backoff", quad_backoff, "lower L on NegativeWeight");
    c_quad->add_option("--out", quad_out, "CSV of weights");
    c_quad->add_option("--json", quad_json, "JSON certificate path (default: stdout)");

    // frames
    auto* c_frames = app.add_subcommand("frames", "Mask partition check and polynomial Bernstein ratios");
    bool frames_check = false;
    std::vector<double> frames_bp;
    int frames_draws = 64, frames_k = 6;
    std::uint64_t frames_seed = 1;
    std::string frames_out;
    c_frames->add_flag("--check-partition", frames_check, "max |a(t)|^2+|a(2t)|^2-1 on [1/2,1]");
    c_frames->add_option("--bernstein-poly", frames_bp, "n p gamma Lmax")->expected(4);
    c_frames->add_option("--draws", frames_draws, "random polynomials per degree");
    c_frames->add_option("--seed", frames_seed, "seed");
    c_frames->add_option("--mask-k", frames_k, "mask smoothness (>= 3)");
    c_frames->add_option("--out", frames_out, "output path (default: stdout)");

    // interpolate / quasi-interp
    struct NetFlags {
        KernelFlags k;
        CenterFlags c;
        std::string target = "bump";
        double s = 3.0, sigma = 4.0, delta = 0.25;
        int degree = 4, L = -1;
        std::string json;
        void attach(CLI::App* sub)
        {
            k.attach(sub);
            c.attach(sub);
            sub->add_option("--target", target, "bump|green_bump|green_peaked|polynomial");
            sub->add_option("--target-s", s, "Green order of the target");
            sub->add_option("--bump-sigma", sigma, "bump width");
            sub->add_option("--target-delta", delta, "peaked target smoothness offset");
            sub->add_option("--target-degree", degree, "polynomial target degree");
            sub->add_option("--json", json, "JSON path (default: stdout)");
        }
    };
    auto* c_interp = app.add_subcommand("interpolate", "Interpolate a target at the centers");
    NetFlags interp_f;
    interp_f.attach(c_interp);
    auto* c_qi = app.add_subcommand("quasi-interp", "Quasi-interpolant of B_J f through a quadrature rule");
    NetFlags qi_f;
    qi_f.attach(c_qi);
    c_qi->add_option("--L", qi_f.L, "rule degree (default: largest feasible)");

    // experiments
    auto* c_stab = app.add_subcommand("stability", "Stability ratio interval per refinement level");
    ExperimentFlags stab_f;
    stab_f.attach(c_stab);
    auto* c_bern = app.add_subcommand("bernstein", "Network Bernstein ratios per refinement level");
    ExperimentFlags bern_f;
    bern_f.attach(c_bern);
    auto* c_rates = app.add_subcommand("rates", "Direct-theorem rate experiment");
    ExperimentFlags rates_f;
    rates_f.attach(c_rates);
    auto* c_inv = app.add_subcommand("inverse", "Inverse-theorem smoothness recovery");
    ExperimentFlags inv_f;
    inv_f.attach(c_inv);
    std::vector<double> inv_syn;
    c_inv->add_option("--synthetic", inv_syn, "mu t levels: fit injected distances 2^{-mu j} j^{-t}")->expected(3);
    auto* c_besov = app.add_subcommand("besov", "Besov sequence-norm verdicts");
    ExperimentFlags besov_f;
    besov_f.attach(c_besov);
    std::vector<double> besov_seq;
    c_besov->add_option("--sequence", besov_seq, "mu t: classify a_n = 2^{-mu n} n^{-t} over r_grid")->expected(2);
    auto* c_cert = app.add_subcommand("certify", "Sequence conditions for C-infinity kernels");
    KernelFlags cert_k;
    double cert_beta = 3.0;
    std::string cert_json;
    cert_k.attach(c_cert);
    c_cert->add_option("--order", cert_beta, "smoothness order beta of the condition");
    c_cert->add_option("--json", cert_json, "JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n')
                ch = ' ';
        err << "error: " << msg << "\n";
        return 2;
    }

    try {
        if (*c_coeffs) {
            const ZonalKernel k = make_kernel(coeffs_k.spec, coeffs_k.n);
            CsvTable t({"l", "coeff"});
            for (int l = 0; l <= k.lmax(); ++l)
                t.add({std::to_string(l), fmt17(k.coeffs[l])});
            sink.emit(coeffs_out, t.str());
        } else if (*c_centers) {
            const CenterSet base = centers_c.load(centers_n);
            const auto sets = refine_nested(base, centers_levels, centers_rho);
            ojson j;
            j["n"] = centers_n;
            j["source"] = centers_c.source();
            ojson lv = ojson::array();
            for (size_t i = 0; i < sets.size(); ++i)
                lv.push_back(level_json(sets[i], static_cast<int>(i)));
            j["levels"] = lv;
            if (centers_n <= 2) {
                const auto mu = voronoi_areas(sets.back());
                double sum = 0.0;
                for (double v : mu)
                    sum += v;
                j["cell_measure_sum"] = sum;
                j["sphere_volume"] = sphere_volume(centers_n);
            }
            if (!centers_out.empty())
                write_file_atomic(centers_out, format_centers(sets.back()));
            sink.emit(centers_json, json_text(j));
        } else if (*c_quad) {
            const CenterSet cs = quad_c.load(quad_n);
            const RuleOptions opt{quad_thr};
            const QuadratureRule r = quad_backoff ? build_rule_backoff(cs, quad_L, opt) : build_rule(cs, quad_L, opt);
            ojson j;
            j["n"] = cs.n;
            j["N"] = cs.size();
            j["source"] = quad_c.source();
            j["requested_L"] = quad_L;
            j["L"] = r.degree_L;
            j["min_weight"] = r.min_weight();
            j["max_weight"] = r.max_weight();
            j["residual"] = r.exactness_residual;
            j["feasibility"] = r.feasibility;
            j["threshold"] = r.threshold;
            if (!quad_out.empty()) {
                CsvTable t({"index", "weight"});
                for (int i = 0; i < cs.size(); ++i)
                    t.add({std::to_string(i), fmt17(r.weights(i))});
                write_file_atomic(quad_out, t.str());
            }
            sink.emit(quad_json, json_text(j));
        } else if (*c_frames) {
            require(frames_check || !frames_bp.empty(), "frames: give --check-partition or --bernstein-poly");
            if (frames_check) {
                ojson j;
                const MaskPair m = build_mask(frames_k);
                j["mask_k"] = frames_k;
                j["partition_max_error"] = mask_partition_error(m);
                sink.emit(frames_bp.empty() ? frames_out : "", json_text(j));
            }
            if (!frames_bp.empty()) {
                const int n = static_cast<int>(frames_bp[0]);
                const double p = frames_bp[1], gamma = frames_bp[2];
                const int Lmax = static_cast<int>(frames_bp[3]);
                require(n == 1 || n == 2, "frames --bernstein-poly: n must be 1 or 2");
                require(p >= 1.0 && Lmax >= 1, "frames --bernstein-poly: need p >= 1 and Lmax >= 1");
                CsvTable t({"L", "max_ratio"});
                for (int L = 8; L <= Lmax; L *= 2)
                    t.add({std::to_string(L), fmt17(poly_bernstein_ratio(n, p, gamma, L, frames_draws, frames_seed))});
                sink.emit(frames_out, t.str());
            }
        } else if (*c_interp || *c_qi) {
            NetFlags& f = *c_interp ? interp_f : qi_f;
            const ZonalKernel k = make_kernel(f.k.spec, f.k.n);
            int n = f.k.n;
            const CenterSet cs = f.c.load(n);
            const Target tg = cli_target(f.target, n, f.s, f.sigma, f.delta, f.degree, k.lmax());
            ojson j;
            if (*c_interp) {
                Vec y(cs.size());
                for (int i = 0; i < cs.size(); ++i)
                    y(i) = tg(cs.points.col(i));
                const SbfNetwork net = interpolate(k, cs, y);
                double res = 0.0;
                for (int i = 0; i < cs.size(); ++i)
                    res = std::max(res, std::abs(evaluate(net, cs.points.col(i)) - y(i)));
                j = network_json(f.k.spec, f.c.source(), net.a);
                j["reproduction_error"] = res;
            } else {
                const int L = f.L >= 0 ? f.L : rule_degree_for(cs, default_feasibility_threshold, 64);
                const QuadratureRule rule = build_rule_backoff(cs, L);
                const int J = largest_frame_level(n, tg.degree(), rule.degree_L, tg.band_limited);
                if (J < 0)
                    fail(ErrorCode::DegreeOverflow, "rule degree admits no frame level");
                const PolynomialOnSphere S = frame_project(make_frame_spec(n, J), tg);
                const SbfNetwork net = quasi_interpolate(k, rule, S);
                j = network_json(f.k.spec, f.c.source(), net.a);
                j["rule_degree"] = rule.degree_L;
                j["J"] = J;
                j["l2_distance"] = network_distance_l2(k, cs, net.a, tg);
            }
            j["target"] = tg.to_json();
            sink.emit(f.json, json_text(j));
        } else if (*c_stab) {
            const ojson rep = run_stability(stab_f.resolve(c_stab));
            if (!stab_f.csv_path.empty()) {
                CsvTable t({"level", "N", "q", "h", "rho", "lower_bound", "upper_bound"});
                for (const auto& L : rep["levels"]) {
                    const auto& s = L["stability"];
                    t.add({L["level"].dump(), L["N"].dump(), fmt17(L["q"]), fmt17(L["h"]), fmt17(L["rho"]),
                           fmt17(s["lower_bound"]),
                           s["upper_bound"].is_string() ? "inf" : fmt17(s["upper_bound"].get<double>())});
                }
                write_file_atomic(stab_f.csv_path, t.str());
            }
            sink.emit(stab_f.json_path, json_text(rep));
        } else if (*c_bern) {
            const ojson rep = run_network_bernstein(bern_f.resolve(c_bern));
            if (!bern_f.csv_path.empty())
                write_file_atomic(bern_f.csv_path, level_csv(rep, {"level", "N", "q", "h", "rho", "max_ratio", "exact_sup"}));
            sink.emit(bern_f.json_path, json_text(rep));
        } else if (*c_rates) {
            const ojson rep = run_direct_rate(rates_f.resolve(c_rates));
            if (!rates_f.csv_path.empty())
                write_file_atomic(rates_f.csv_path,
                                  level_csv(rep, {"level", "N", "q", "h", "rho", "rule_degree", "J", "distance",
                                                  "projection_distance"}));
            sink.emit(rates_f.json_path, json_text(rep));
        } else if (*c_inv) {
            ojson rep;
            if (!inv_syn.empty()) {
                require(inv_syn[2] >= 3, "inverse --synthetic: need at least 3 levels");
                rep = synthetic_inverse(inv_syn[0], inv_syn[1], static_cast<int>(inv_syn[2]));
            } else {
                rep = run_inverse_recovery(inv_f.resolve(c_inv));
                if (!inv_f.csv_path.empty())
                    write_file_atomic(inv_f.csv_path, level_csv(rep, {"level", "N", "q", "h", "rho", "distance"}));
            }
            sink.emit(inv_f.json_path, json_text(rep));
        } else if (*c_besov) {
            const ExperimentConfig cfg = besov_f.resolve(c_besov);
            ojson rep;
            if (!besov_seq.empty()) {
                const double mu = besov_seq[0], t = besov_seq[1];
                rep["experiment"] = "besov_sequence";
                rep["mu"] = mu;
                rep["t"] = t;
                rep["tau"] = std::isinf(cfg.tau) ? ojson("inf") : ojson(cfg.tau);
                ojson e = ojson::array();
                CsvTable tab({"r", "verdict", "analytic_finite"});
                for (double r : cfg.r_grid) {
                    const Verdict v = sequence_norm_verdict(
                        [&](double nn) { return -mu * nn * std::log(2.0) - t * std::log(nn); }, cfg.tau, r);
                    ojson x;
                    x["r"] = r;
                    x["verdict"] = verdict_name(v);
                    x["analytic_finite"] = besov_analytic_finite(mu, t, cfg.tau, r);
                    e.push_back(x);
                    tab.add({fmt17(r), verdict_name(v), besov_analytic_finite(mu, t, cfg.tau, r) ? "true" : "false"});
                }
                rep["entries"] = e;
                if (!besov_f.csv_path.empty())
                    write_file_atomic(besov_f.csv_path, tab.str());
            } else {
                rep = run_besov(cfg);
                if (!besov_f.csv_path.empty())
                    write_file_atomic(besov_f.csv_path, level_csv(rep, {"level", "N", "q", "h", "rho", "distance"}));
            }
            sink.emit(besov_f.json_path, json_text(rep));
        } else if (*c_cert) {
            const ZonalKernel k = make_kernel(cert_k.spec, cert_k.n);
            sink.emit(cert_json, json_text(certify_json(k, cert_k.spec, check_sequence_conditions(k, cert_beta))));
        }
    } catch (const Error& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace sbf::cli
