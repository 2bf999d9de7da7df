// roughpath: command-line driver for lifting, enhancing, integrating and solving.

#include "expression.hpp"

#include <roughpath.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rp = roughpath;
using rp::json;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_numerical = 3;

constexpr const char* output_dir_env = "ROUGHPATH_OUTPUT_DIR";

struct NoiseOptions {
    std::size_t dim = 1;
    std::size_t steps = 1024;
    std::size_t oversample = 32;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    double horizon = 1.0;
    std::string enhancement = "strat";

    void attach(CLI::App& app) {
        app.add_option("--dim", dim, "Driver dimension")->check(CLI::PositiveNumber);
        app.add_option("--steps", steps, "Coarse grid steps")->check(CLI::PositiveNumber);
        app.add_option("--oversample", oversample, "Fine steps per coarse step")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Random seed");
        app.add_option("--path-index", path_index, "Sample index within the seed's stream");
        app.add_option("--horizon", horizon, "Time horizon T")->check(CLI::PositiveNumber);
        app.add_option("--enhancement", enhancement, "ito | strat | strat-shift")
            ->check(CLI::IsMember({"ito", "strat", "strat-shift"}));
    }

    rp::Enhancement kind() const { return *rp::parse_enhancement(enhancement); }

    rp::DriverSample simulate() const {
        return rp::simulate_driver(dim, steps, horizon, oversample, seed, path_index, kind());
    }

    json config() const {
        return {{"dim", dim},       {"steps", steps}, {"oversample", oversample}, {"seed", seed},
                {"path_index", path_index}, {"horizon", horizon}, {"enhancement", enhancement}};
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rp::DataError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw rp::DataError(what + ": " + e.what());
    }
}

// --out wins; otherwise $ROUGHPATH_OUTPUT_DIR/<default_name>; otherwise stdout.
void emit(const std::string& out, const std::string& default_name, const std::string& text) {
    std::string target = out;
    if (target.empty()) {
        if (const char* dir = std::getenv(output_dir_env); dir && *dir) target = (std::filesystem::path(dir) / default_name).string();
    }
    if (target.empty() || target == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(target, std::ios::binary);
    if (!f) throw rp::DataError("cannot write '" + target + "'");
    f << text;
    if (!f) throw rp::DataError("write to '" + target + "' failed");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

rp::Mat parse_matrix(const std::string& text) {
    const json j = parse_json_text(text, "--A");
    if (!j.is_array() || j.empty()) throw std::invalid_argument("--A must be a JSON array of rows");
    const std::size_t m = j.size();
    rp::Mat a(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!j[i].is_array() || j[i].size() != m) throw std::invalid_argument("--A must be square");
        for (std::size_t k = 0; k < m; ++k) {
            if (!j[i][k].is_number()) throw std::invalid_argument("--A entries must be numbers");
            a(i, k) = j[i][k].get<double>();
        }
    }
    return a;
}

rp::RoughPath load_rough_path(const std::string& path) {
    const json j = parse_json_text(read_file(path), path);
    return rp::rough_path_from_json(j.contains("rough_path") ? j.at("rough_path") : j);
}

json mat_rows(const rp::Mat& m) {
    json out = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rough path toolkit: lifts, enhanced Brownian motion, rough integrals, RDE and RPDE solvers"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out;
    app.add_option("-o,--out", out, std::string("Output file (default: $") + output_dir_env + "/<command>.<ext>, else stdout)");

    // lift
    auto* lift = app.add_subcommand("lift", "Piecewise-linear lift of a CSV path or a generator");
    std::string lift_input, generator;
    std::size_t lift_steps = 1024;
    double lift_horizon = 1.0;
    auto* in_opt = lift->add_option("--input", lift_input, "CSV file with header t,x1,...,xm");
    lift->add_option("--generator", generator, "Comma-separated components in t, e.g. \"t,t^2\"")->excludes(in_opt);
    lift->add_option("--steps", lift_steps, "Uniform steps for --generator")->check(CLI::PositiveNumber);
    lift->add_option("--horizon", lift_horizon, "Horizon for --generator")->check(CLI::PositiveNumber);

    // enhance
    auto* enh = app.add_subcommand("enhance", "Sample Brownian motion and build its level-2 enhancement");
    NoiseOptions enh_noise;
    enh_noise.attach(*enh);
    std::string enh_format = "json";
    enh->add_option("--format", enh_format, "json (rough path) | csv (level-1 samples)")->check(CLI::IsMember({"json", "csv"}));

    // bracket
    auto* br = app.add_subcommand("bracket", "Bracket [X]_t = X_{0,t} (x) X_{0,t} - 2 Sym(XX_{0,t})");
    NoiseOptions br_noise;
    br_noise.attach(*br);
    std::string br_input;
    br->add_option("--input", br_input, "Rough path JSON instead of simulating");

    // integrate
    auto* integ = app.add_subcommand("integrate", "Rough integral of X (x) dX against the enhancement, with oracle checks");
    NoiseOptions int_noise;
    int_noise.attach(*integ);
    std::string int_input;
    integ->add_option("--input", int_input, "Rough path JSON instead of simulating");

    // solve
    auto* solve = app.add_subcommand("solve", "Solve an RDE preset driven by enhanced Brownian motion");
    NoiseOptions solve_noise;
    solve_noise.steps = 4096;
    solve_noise.attach(*solve);
    std::string preset = "gbm", solver = "step";
    double tol = 1e-10;
    solve->add_option("--preset", preset, "gbm | linear-drift | sine-diffusion | ou, optional -ito/-strat/-strat-shift suffix");
    solve->add_option("--solver", solver, "step | picard")->check(CLI::IsMember({"step", "picard"}));
    solve->add_option("--tol", tol, "Picard tolerance")->check(CLI::PositiveNumber);

    // solve-rpde
    auto* rpde = app.add_subcommand("solve-rpde", "Solve dY = (AY + f0) dt + f dX in mild form");
    NoiseOptions rpde_noise;
    rpde_noise.steps = 4096;
    rpde_noise.attach(*rpde);
    std::string a_text = "[[-1,0],[0,-2]]", rpde_preset = "additive", rpde_solver = "step";
    double rpde_tol = 1e-10;
    rpde->add_option("--A", a_text, "Generator as a JSON matrix");
    rpde->add_option("--preset", rpde_preset, "orbit | additive | linear")->check(CLI::IsMember({"orbit", "additive", "linear"}));
    rpde->add_option("--solver", rpde_solver, "step | picard")->check(CLI::IsMember({"step", "picard"}));
    rpde->add_option("--tol", rpde_tol, "Picard tolerance")->check(CLI::PositiveNumber);

    // convergence
    auto* conv = app.add_subcommand("convergence", "Strong-error ladder h = 2^-min .. 2^-max");
    rp::ConvergenceConfig ccfg;
    conv->add_option("--preset", ccfg.preset, "RDE preset (see solve)");
    conv->add_option("--min-level", ccfg.coarsest_level, "Coarsest level (h = 2^-level)");
    conv->add_option("--max-level", ccfg.finest_level, "Finest level");
    conv->add_option("--samples", ccfg.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
    conv->add_option("--seed", ccfg.seed, "Random seed");
    conv->add_option("--oversample", ccfg.oversample, "Fine steps per finest cell")->check(CLI::PositiveNumber);
    conv->add_option("--jobs", ccfg.jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*lift) {
            if (lift_input.empty() == generator.empty()) throw std::invalid_argument("lift: give exactly one of --input or --generator");
            std::optional<rp::SampledPath> path;
            json cfg = {{"command", "lift"}};
            if (!lift_input.empty()) {
                std::ifstream in(lift_input);
                if (!in) throw rp::DataError("cannot open '" + lift_input + "'");
                path = rp::read_path_csv(in);
                cfg["input"] = lift_input;
            } else {
                const auto comps = rp::cli::parse_generator(generator);
                path = rp::SampledPath::from_function(rp::TimeGrid::uniform(lift_horizon, lift_steps), comps.size(), [&](double t) {
                    rp::Vec v(comps.size());
                    for (std::size_t a = 0; a < comps.size(); ++a) v[a] = comps[a](t);
                    return v;
                });
                cfg["generator"] = generator;
                cfg["steps"] = lift_steps;
                cfg["horizon"] = lift_horizon;
            }
            const rp::RoughPath r = rp::lift_piecewise_linear(*path);
            json j;
            j["metadata"] = rp::run_metadata(cfg, 0);
            j["rough_path"] = rp::to_json(r);
            j["chen_defect"] = rp::max_chen_defect(r);
            j["level2_total"] = mat_rows(r.second_level(0, r.steps()));
            emit(out, "lift.json", dump(j));
        } else if (*enh) {
            const rp::DriverSample s = enh_noise.simulate();
            json cfg = enh_noise.config();
            cfg["command"] = "enhance";
            if (enh_format == "csv") {
                std::ostringstream os;
                rp::write_path_csv(os, s.driver.path());
                emit(out, "enhance.csv", os.str());
            } else {
                json j;
                j["metadata"] = rp::run_metadata(cfg, enh_noise.seed);
                j["rough_path"] = rp::to_json(s.driver);
                j["chen_defect"] = rp::max_chen_defect(s.driver);
                emit(out, "enhance.json", dump(j));
            }
        } else if (*br) {
            json cfg = br_noise.config();
            cfg["command"] = "bracket";
            const rp::RoughPath r = br_input.empty() ? br_noise.simulate().driver : load_rough_path(br_input);
            if (!br_input.empty()) cfg["input"] = br_input;
            const auto brackets = rp::bracket_path(r);
            double worst = 0.0;
            json t = json::array(), b = json::array();
            for (std::size_t k = 0; k < brackets.size(); ++k) {
                for (double v : brackets[k].span()) worst = std::max(worst, std::abs(v));
                t.push_back(r.grid()[k]);
                b.push_back(mat_rows(brackets[k]));
            }
            json j;
            j["metadata"] = rp::run_metadata(cfg, br_noise.seed);
            j["max_abs_bracket"] = worst;
            j["t"] = std::move(t);
            j["bracket"] = std::move(b);
            emit(out, "bracket.json", dump(j));
        } else if (*integ) {
            json cfg = int_noise.config();
            cfg["command"] = "integrate";
            std::optional<rp::DriverSample> sample;
            if (int_input.empty()) sample = int_noise.simulate();
            const rp::RoughPath r = sample ? sample->driver : load_rough_path(int_input);
            if (!int_input.empty()) cfg["input"] = int_input;
            const std::size_t d = r.dim(), n = r.steps();
            const rp::Vec z = rp::rough_integral(rp::identity_integrand(r), r, 0, n).value;
            rp::Mat integral(d, d);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t k = 0; k < d; ++k) integral(i, k) = z[i * d + k];
            json j;
            j["metadata"] = rp::run_metadata(cfg, int_noise.seed);
            j["integral_X_dX"] = mat_rows(integral);
            if (sample) {
                // Oracle for the symmetric part: 1/2 (B_T (x) B_T - C) with C = QV (ito), 0 (strat),
                // QV - T Id (strat-shift). The antisymmetric part (the area) is passed through.
                const rp::Vec bt = r.increment(0, n);
                rp::Mat correction(d, d);
                if (int_noise.kind() != rp::Enhancement::Strat) correction = rp::realized_qv(sample->fine, 0, sample->fine.steps());
                if (int_noise.kind() == rp::Enhancement::StratShift)
                    for (std::size_t a = 0; a < d; ++a) correction(a, a) -= r.grid().horizon();
                const rp::Mat expected = 0.5 * (rp::outer(bt.span(), bt.span()) - correction) + rp::anti(r.second_level(0, n));
                j["expected"] = mat_rows(expected);
                j["max_abs_error"] = rp::sup_distance(integral.span(), expected.span());
            }
            emit(out, "integrate.json", dump(j));
        } else if (*solve) {
            json cfg = solve_noise.config();
            cfg["command"] = "solve";
            cfg["preset"] = preset;
            cfg["solver"] = solver;
            cfg["tol"] = tol;
            const rp::RDEPreset p = rp::rde_preset(preset, solve_noise.kind());
            if (solve_noise.dim != 1) throw std::invalid_argument("solve: RDE presets use a one-dimensional driver (--dim 1)");
            cfg["enhancement"] = std::string(rp::to_string(p.enhancement));
            const rp::DriverSample s = rp::simulate_driver(1, solve_noise.steps, solve_noise.horizon, solve_noise.oversample,
                                                           solve_noise.seed, solve_noise.path_index, p.enhancement);
            const rp::RDEProblem prob = p.problem(s.driver);
            rp::PicardOptions opts;
            opts.tol = tol;
            rp::RDESolution sol = solver == "picard" ? rp::solve_picard(prob, opts) : rp::solve_step_scheme(prob);
            sol.residual = rp::residual_check(sol, prob);
            json j = rp::to_json(sol);
            j["metadata"] = rp::run_metadata(cfg, solve_noise.seed);
            j["terminal"] = sol.terminal()[0];
            if (p.exact) {
                const double bt = s.driver.path().value(s.driver.steps())[0];
                const double ex = p.exact(s.driver.grid().back(), bt);
                j["exact_terminal"] = ex;
                j["terminal_abs_error"] = std::abs(sol.terminal()[0] - ex);
            }
            emit(out, "solve.json", dump(j));
        } else if (*rpde) {
            json cfg = rpde_noise.config();
            cfg["command"] = "solve-rpde";
            cfg["A"] = a_text;
            cfg["preset"] = rpde_preset;
            cfg["solver"] = rpde_solver;
            cfg["tol"] = rpde_tol;
            const rp::Mat a = parse_matrix(a_text);
            const rp::RPDEProblem prob = rp::rpde_preset(rpde_preset, a, rpde_noise.simulate().driver);
            rp::PicardOptions opts;
            opts.tol = rpde_tol;
            rp::RDESolution sol = rpde_solver == "picard" ? rp::solve_mild_picard(prob, opts) : rp::solve_mild_step(prob);
            sol.residual = rp::mild_residual(sol, prob, std::max<std::size_t>(1, rpde_noise.steps / 64));
            json j = rp::to_json(sol);
            j["metadata"] = rp::run_metadata(cfg, rpde_noise.seed);
            emit(out, "solve-rpde.json", dump(j));
        } else if (*conv) {
            const auto rows = rp::convergence_study(ccfg);
            std::vector<std::vector<double>> table;
            for (const auto& r : rows) table.push_back({r.h, r.mean_strong_error, r.fitted_order});
            std::ostringstream os;
            rp::write_table_csv(os, {"h", "mean_strong_error", "fitted_order"}, table);
            emit(out, "convergence.csv", os.str());
        }
    } catch (const rp::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const rp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::out_of_range& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return 0;
}
