#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "koopkit/analysis.hpp"
#include "koopkit/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace koop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadFlags = 2;
constexpr int kExitParseFailure = 3;
constexpr int kExitFitFailure = 4;
constexpr int kExitInstability = 5;

RealVector parse_vector(const std::string& csv) {
    std::vector<double> values;
    std::string field;
    std::istringstream is(csv);
    while (std::getline(is, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ValidationError("cannot parse vector component '" + field + "'");
        }
    }
    if (values.empty()) throw ValidationError("empty vector argument");
    RealVector v(static_cast<Index>(values.size()));
    for (size_t i = 0; i < values.size(); ++i) v(static_cast<Index>(i)) = values[i];
    return v;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// "monomials:2", "monomials:3:const", or the built-in lifting "example1"
// (x1, x2, x1^2) that closes the quadratic benchmark map
Dictionary parse_dictionary_flag(const std::string& flag, Index state_dim) {
    if (flag == "example1") {
        if (state_dim != 2)
            throw ValidationError("example1 dictionary needs 2-dimensional data");
        std::vector<std::vector<int>> exps = {{1, 0}, {0, 1}, {2, 0}};
        return polynomial_dictionary(2, exps,
                                     RealMatrix(RealMatrix::Identity(3, 3)),
                                     {"x1", "x2", "x1^2"});
    }
    std::vector<std::string> parts;
    std::string field;
    std::istringstream is(flag);
    while (std::getline(is, field, ':')) parts.push_back(field);
    if (parts.empty() || parts[0] != "monomials")
        throw ValidationError("unsupported dictionary '" + flag +
                              "' (expected monomials:<degree>[:const] or a "
                              "built-in lifting name)");
    if (parts.size() < 2)
        throw ValidationError("dictionary needs a degree, e.g. monomials:2");
    int degree = 0;
    try {
        degree = std::stoi(parts[1]);
    } catch (const std::exception&) {
        throw ValidationError("bad dictionary degree '" + parts[1] + "'");
    }
    const bool constant = parts.size() > 2 && parts[2] == "const";
    return monomial_dictionary(state_dim, degree, constant);
}

std::vector<Trajectory> read_trajectories(const std::vector<std::string>& paths) {
    std::vector<Trajectory> out;
    for (const auto& p : paths) out.push_back(read_trajectory_csv(p));
    return out;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw IoError("cannot write output file: " + path);
    return file;
}

struct FitOptions {
    std::vector<std::string> inputs;
    std::string output;
    std::string method = "edmd";
    std::string dict = "monomials:2";
    std::string system;
    double a = 0.9, b = 0.8;
    double c = -0.5, d = -0.5;
    int rank = 0;
    int depth = 2;
    int column = 1;
    int basis_degree = 2;
    int product_degree = 2;
    double ts = 0.0;
};

// canonical eigenfunction lifting (x1, x2+x1^2, x1^2, 1) of the control
// benchmark
Dictionary example4_lifting() {
    std::vector<std::vector<int>> exps = {{1, 0}, {0, 1}, {2, 0}, {0, 0}};
    RealMatrix coef(4, 4);
    coef << 1, 0, 0, 0,
            0, 1, 1, 0,
            0, 0, 1, 0,
            0, 0, 0, 1;
    return polynomial_dictionary(2, exps, coef, {"x1", "x2+x1^2", "x1^2", "1"});
}

int cmd_fit(const FitOptions& opt, const std::string& command_line) {
    const std::vector<Trajectory> trajs = read_trajectories(opt.inputs);
    const Index dim = trajs.front().dimension();

    ModelProvenance provenance{command_line, hash_file(opt.inputs.front()),
                               utc_timestamp()};

    double linearity = 0.0, reconstruction = 0.0;
    if (opt.method == "dmd" || opt.method == "edmd") {
        const SnapshotPair pairs =
            snapshot_pairs(std::span<const Trajectory>(trajs));
        KoopmanModel model =
            opt.method == "dmd"
                ? fit_dmd(pairs, opt.rank > 0 ? std::optional<Index>(opt.rank)
                                              : std::nullopt)
                : fit_edmd(pairs, parse_dictionary_flag(opt.dict, dim));
        for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
        linearity = model.linearity_residual;
        reconstruction = model.reconstruction_residual;
        save_model(opt.output, model, provenance);
    } else if (opt.method == "gedmd") {
        // finite differences of the sampled trajectory at interior points
        const Trajectory& traj = trajs.front();
        if (traj.samples() < 3)
            throw InsufficientDataError("gedmd needs at least 3 samples");
        const double dt = traj.times()(1) - traj.times()(0);
        const Index interior = traj.samples() - 2;
        RealMatrix states(dim, interior), derivs(dim, interior);
        for (Index k = 1; k + 1 < traj.samples(); ++k) {
            states.col(k - 1) = traj.state(k);
            derivs.col(k - 1) =
                (traj.state(k + 1) - traj.state(k - 1)) / (2.0 * dt);
        }
        KoopmanModel model = fit_generator_edmd(
            states, derivs, parse_dictionary_flag(opt.dict, dim));
        model.ts = opt.ts > 0.0 ? opt.ts : dt;
        for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
        linearity = model.linearity_residual;
        reconstruction = model.reconstruction_residual;
        save_model(opt.output, model, provenance);
    } else if (opt.method == "hankel") {
        const Trajectory& traj = trajs.front();
        if (opt.column < 1 || opt.column > traj.dimension())
            throw ValidationError("hankel column out of range");
        const RealVector series = traj.states().col(opt.column - 1);
        KoopmanModel model =
            hankel_dmd(series, opt.depth,
                       opt.rank > 0 ? std::optional<Index>(opt.rank) : std::nullopt);
        linearity = model.linearity_residual;
        reconstruction = model.reconstruction_residual;
        save_model(opt.output, model, provenance);
    } else if (opt.method == "conjugacy") {
        if (opt.system != "example1")
            throw ValidationError("conjugacy fitting supports --system example1");
        const DiscreteMap map = example1_map(opt.a, opt.b);
        RealMatrix linear = RealMatrix::Zero(2, 2);
        linear(0, 0) = opt.a;
        linear(1, 1) = opt.b;
        const RealMatrix samples = trajs.front().states().transpose();
        const ConjugacyFit fit = fit_conjugacy(
            map, linear, monomial_range_dictionary(2, 2, opt.basis_degree),
            samples);
        for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
        const EigenpairSet lifted =
            eigenpair_products(fit.eigenpairs, opt.product_degree);
        const SpectralModel spec = spectral_from_eigenpairs(lifted, samples);
        linearity = fit.fit_residual;
        double worst = 0.0;
        for (Index i = 0; i < samples.cols(); ++i) {
            const RealVector x = samples.col(i);
            worst = std::max(
                worst,
                ((spec.modes * spec.eigenfunctions(x)).real() - x).norm());
        }
        reconstruction = worst;
        save_model(opt.output, spec, provenance);
    } else if (opt.method == "bilinear") {
        if (opt.system != "example4")
            throw ValidationError("bilinear lifting supports --system example4");
        const ControlAffineSystem sys = example4_system(opt.c, opt.d);
        const Dictionary lifting = opt.dict == "example4"
                                       ? example4_lifting()
                                       : parse_dictionary_flag(opt.dict, dim);
        RealMatrix samples(dim, 0);
        for (const auto& traj : trajs) {
            const Index base = samples.cols();
            samples.conservativeResize(dim, base + traj.samples());
            samples.rightCols(traj.samples()) = traj.states().transpose();
        }
        const BilinearLiftedModel model =
            lift_control_fields(sys, lifting, samples);
        for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
        linearity = model.fit_residual;
        double worst = 0.0;
        for (Index i = 0; i < samples.cols(); ++i) {
            const RealVector x = samples.col(i);
            worst = std::max(
                worst, (model.V * lifting.eval(x) - sys.output(x)).norm());
        }
        reconstruction = worst;
        save_model(opt.output, model, provenance);
    } else {
        throw ValidationError("unknown fit method '" + opt.method + "'");
    }

    std::cout << "linearity residual: " << format_double(linearity) << "\n";
    std::cout << "reconstruction residual: " << format_double(reconstruction)
              << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& x0_flag,
                int steps, const std::string& output,
                const std::string& compare) {
    const LoadedModel loaded = load_model(model_path);
    const RealVector x0 = parse_vector(x0_flag);

    RealMatrix y;
    double ts = 1.0;
    if (loaded.kind == ModelKind::Spectral) {
        y = predict(loaded.spectral(), x0, steps);
        if (loaded.spectral().time_kind == TimeKind::Continuous)
            ts = loaded.spectral().ts;
    } else if (loaded.kind == ModelKind::Bilinear) {
        throw ValidationError("predict needs a dmd/edmd/generator/spectral model");
    } else {
        y = predict(loaded.koopman(), x0, steps);
        if (loaded.koopman().sampling == TimeKind::Continuous)
            ts = loaded.koopman().ts;
    }

    std::optional<RealMatrix> truth;
    if (!compare.empty()) {
        const Trajectory t = read_trajectory_csv(compare);
        if (t.samples() < y.rows() || t.dimension() != y.cols())
            throw IoError("comparison trajectory shape mismatch");
        truth = t.states().topRows(y.rows());
    }

    std::ofstream file;
    std::ostream& out = open_output(file, output);
    out << "t";
    for (Index c = 0; c < y.cols(); ++c) out << ",y" << (c + 1);
    if (truth) out << ",err";
    out << "\n";
    for (Index r = 0; r < y.rows(); ++r) {
        out << format_double(static_cast<double>(r) * ts);
        for (Index c = 0; c < y.cols(); ++c) out << "," << format_double(y(r, c));
        if (truth)
            out << ","
                << format_double(
                       (y.row(r) - truth->row(r)).cwiseAbs().maxCoeff());
        out << "\n";
    }
    return kExitOk;
}

int cmd_spectrum(const std::string& model_path, bool with_modes) {
    const LoadedModel loaded = load_model(model_path);
    SpectralModel spec = loaded.kind == ModelKind::Spectral
                             ? loaded.spectral()
                             : extract_spectrum(loaded.koopman());
    if (loaded.kind == ModelKind::Bilinear)
        throw ValidationError("spectrum needs a dmd/edmd/generator/spectral model");

    const ComplexVector vals = spec.eigenvalues();
    const bool continuous = spec.time_kind == TimeKind::Continuous;
    const double ts = spec.ts;

    if (continuous) {
        std::cout << "s_re,s_im";
        if (ts > 0.0) std::cout << ",lambda_re,lambda_im";
    } else {
        std::cout << "lambda_re,lambda_im,modulus,gamma,omega";
    }
    if (with_modes)
        for (Index r = 0; r < spec.modes.rows(); ++r)
            std::cout << ",mode" << (r + 1) << "_re,mode" << (r + 1) << "_im";
    std::cout << "\n";

    for (Index j = 0; j < vals.size(); ++j) {
        if (continuous) {
            std::cout << format_double(vals(j).real()) << ","
                      << format_double(vals(j).imag());
            if (ts > 0.0) {
                const std::complex<double> lambda = std::exp(vals(j) * ts);
                std::cout << "," << format_double(lambda.real()) << ","
                          << format_double(lambda.imag());
            }
        } else {
            const double step = ts > 0.0 ? ts : 1.0;
            const double modulus = std::abs(vals(j));
            std::cout << format_double(vals(j).real()) << ","
                      << format_double(vals(j).imag()) << ","
                      << format_double(modulus) << ","
                      << format_double(std::log(modulus) / step) << ","
                      << format_double(std::arg(vals(j)) / step);
        }
        if (with_modes)
            for (Index r = 0; r < spec.modes.rows(); ++r)
                std::cout << "," << format_double(spec.modes(r, j).real()) << ","
                          << format_double(spec.modes(r, j).imag());
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_lyapunov(const std::string& model_path, int grid, double lo, double hi,
                 const std::string& output) {
    const LoadedModel loaded = load_model(model_path);
    const SpectralModel spec = loaded.kind == ModelKind::Spectral
                                   ? loaded.spectral()
                                   : extract_spectrum(loaded.koopman());

    const StabilityReport stability = classify_stability(spec);
    if (stability.overall != Verdict::Stable) {
        const ComplexVector vals = spec.eigenvalues();
        Index worst = 0;
        for (Index j = 1; j < vals.size(); ++j)
            if (std::abs(vals(j)) > std::abs(vals(worst))) worst = j;
        std::cerr << "error: spectrum is not strictly stable; offending eigenvalue "
                  << format_double(vals(worst).real()) << "+"
                  << format_double(vals(worst).imag()) << "i (modulus "
                  << format_double(std::abs(vals(worst))) << ")\n";
        return kExitInstability;
    }

    const LyapunovCertificate cert = synthesize_lyapunov(spec);
    std::cout << "P diagonal:";
    for (Index j = 0; j < cert.P().rows(); ++j)
        std::cout << " " << format_double(cert.P()(j, j).real());
    std::cout << "\n";

    if (!output.empty()) {
        if (spec.dictionary.input_dim() != 2)
            throw ValidationError("grid output needs a 2-dimensional state space");
        std::ofstream file(output);
        if (!file) throw IoError("cannot write grid file: " + output);
        file << "x1,x2,V\n";
        const double step = (hi - lo) / static_cast<double>(grid - 1);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                RealVector x(2);
                x << lo + step * i, lo + step * j;
                file << format_double(x(0)) << "," << format_double(x(1)) << ","
                     << format_double(cert.value(x)) << "\n";
            }
    }
    return kExitOk;
}

MpcProblem read_mpc_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open MPC problem file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid MPC problem JSON: " + std::string(e.what()));
    }
    try {
        auto matrix_of = [](const json& mj) {
            const auto rows = mj.get<std::vector<std::vector<double>>>();
            RealMatrix m(static_cast<Index>(rows.size()),
                         static_cast<Index>(rows.at(0).size()));
            for (size_t r = 0; r < rows.size(); ++r)
                for (size_t c = 0; c < rows[r].size(); ++c)
                    m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
            return m;
        };
        auto vector_of = [](const json& vj) {
            const auto vals = vj.get<std::vector<double>>();
            RealVector v(static_cast<Index>(vals.size()));
            for (size_t i = 0; i < vals.size(); ++i)
                v(static_cast<Index>(i)) = vals[i];
            return v;
        };
        MpcProblem p{j.at("horizon").get<int>(),
                     matrix_of(j.at("Q")),
                     matrix_of(j.at("R")),
                     vector_of(j.at("u_lower")),
                     vector_of(j.at("u_upper")),
                     matrix_of(j.at("y_ref")),
                     j.at("ts").get<double>()};
        return p;
    } catch (const json::exception& e) {
        throw IoError("malformed MPC problem: " + std::string(e.what()));
    }
}

int cmd_mpc(const std::string& model_path, const std::string& problem_path,
            const std::string& x0_flag, int steps, const std::string& output,
            const std::string& summary_path, const std::string& system,
            double c, double d) {
    const LoadedModel loaded = load_model(model_path);
    if (loaded.kind != ModelKind::Bilinear)
        throw ValidationError("mpc needs a bilinear model file");
    const MpcProblem problem = read_mpc_problem(problem_path);
    const RealVector x0 = parse_vector(x0_flag);

    if (system != "example4")
        throw ValidationError("mpc simulation supports --system example4");
    const ControlAffineSystem plant = example4_system(c, d);

    const MpcResult result =
        run_mpc(plant, loaded.bilinear(), problem, x0, steps);

    int violations = 0;
    for (const auto& step : result.steps)
        for (Index i = 0; i < step.input.size(); ++i)
            if (step.input(i) < problem.u_lower(i) ||
                step.input(i) > problem.u_upper(i))
                ++violations;

    if (!output.empty()) {
        std::ofstream file(output);
        if (!file) throw IoError("cannot write log file: " + output);
        file << "t";
        for (Index i = 0; i < x0.size(); ++i) file << ",x" << (i + 1);
        for (Index i = 0; i < problem.u_lower.size(); ++i) file << ",u" << (i + 1);
        file << ",stage_cost\n";
        for (const auto& step : result.steps) {
            file << format_double(step.t);
            for (Index i = 0; i < step.state.size(); ++i)
                file << "," << format_double(step.state(i));
            for (Index i = 0; i < step.input.size(); ++i)
                file << "," << format_double(step.input(i));
            file << "," << format_double(step.stage_cost) << "\n";
        }
    }
    if (!summary_path.empty()) {
        json summary{{"total_cost", result.total_cost},
                     {"constraint_violations", violations},
                     {"qp_nonconverged_steps", result.qp_nonconverged_steps},
                     {"steps", static_cast<int>(result.steps.size())}};
        std::ofstream file(summary_path);
        if (!file) throw IoError("cannot write summary file: " + summary_path);
        file << summary.dump(2) << "\n";
    }
    std::cout << "total cost: " << format_double(result.total_cost) << "\n";
    std::cout << "constraint violations: " << violations << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& system, double a, double b, double c,
                 double d, const std::string& x0_flag, int steps, double t_end,
                 double dt, const std::string& u_flag,
                 const std::string& output) {
    std::optional<Trajectory> traj;
    if (system == "example1") {
        traj = simulate_map(example1_map(a, b), parse_vector(x0_flag), steps);
    } else if (system == "example4") {
        RealVector u_const = RealVector::Zero(2);
        if (!u_flag.empty()) u_const = parse_vector(u_flag);
        if (u_const.size() != 2)
            throw ValidationError("example4 input must have 2 components");
        traj = integrate_rk4(example4_system(c, d), parse_vector(x0_flag), t_end,
                             dt, [&u_const](double) { return u_const; });
    } else if (system == "cubic") {
        traj = integrate_rk4(cubic_decay(), parse_vector(x0_flag), t_end, dt);
    } else {
        throw ValidationError("unknown system '" + system +
                              "' (example1, example4, cubic)");
    }

    if (output.empty())
        write_trajectory_csv(std::cout, *traj);
    else
        write_trajectory_csv(fs::path(output), *traj);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman operator model fitting, analysis and control toolkit"};
    app.require_subcommand(1);

    std::string command_line;
    for (int i = 0; i < argc; ++i) {
        if (i) command_line += " ";
        command_line += argv[i];
    }

    // fit
    FitOptions fit_opt;
    CLI::App* fit = app.add_subcommand("fit", "Fit a model from trajectory CSV data");
    fit->add_option("--input", fit_opt.inputs, "input trajectory CSV (repeatable)")
        ->required();
    fit->add_option("--output", fit_opt.output, "output model JSON")->required();
    fit->add_option("--method", fit_opt.method,
                    "dmd | edmd | gedmd | hankel | conjugacy | bilinear");
    fit->add_option("--dict", fit_opt.dict, "dictionary, monomials:<deg>[:const]");
    fit->add_option("--rank", fit_opt.rank, "SVD rank truncation for dmd/hankel");
    fit->add_option("--depth", fit_opt.depth, "Hankel depth L");
    fit->add_option("--column", fit_opt.column, "state column for hankel (1-based)");
    fit->add_option("--system", fit_opt.system,
                    "built-in system for conjugacy/bilinear");
    fit->add_option("--a", fit_opt.a, "example1 parameter a");
    fit->add_option("--b", fit_opt.b, "example1 parameter b");
    fit->add_option("--c", fit_opt.c, "example4 parameter c");
    fit->add_option("--d", fit_opt.d, "example4 parameter d");
    fit->add_option("--basis-degree", fit_opt.basis_degree,
                    "max degree of the conjugacy residual basis");
    fit->add_option("--product-degree", fit_opt.product_degree,
                    "eigenpair product degree for the spectral model");
    fit->add_option("--ts", fit_opt.ts, "sampling time override for gedmd");

    // predict
    std::string predict_model, predict_x0 = "0", predict_output, predict_compare;
    int predict_steps = 10;
    CLI::App* pred = app.add_subcommand("predict", "Roll a fitted model forward");
    pred->add_option("--model", predict_model, "model JSON")->required();
    pred->add_option("--x0", predict_x0, "initial state, comma separated")->required();
    pred->add_option("--steps", predict_steps, "number of steps");
    pred->add_option("--output", predict_output, "output CSV (default stdout)");
    pred->add_option("--compare", predict_compare, "truth CSV for an error column");

    // spectrum
    std::string spectrum_model;
    bool spectrum_modes = false;
    CLI::App* spect = app.add_subcommand("spectrum", "Print eigenvalues and modes");
    spect->add_option("--model", spectrum_model, "model JSON")->required();
    spect->add_flag("--modes", spectrum_modes, "append mode columns");

    // lyapunov
    std::string lyap_model, lyap_output;
    int lyap_grid = 21;
    double lyap_min = -1.0, lyap_max = 1.0;
    CLI::App* lyap = app.add_subcommand("lyapunov", "Synthesize a Lyapunov certificate");
    lyap->add_option("--model", lyap_model, "model JSON")->required();
    lyap->add_option("--output", lyap_output, "grid CSV (x1, x2, V)");
    lyap->add_option("--grid", lyap_grid, "grid points per axis");
    lyap->add_option("--min", lyap_min, "grid lower bound");
    lyap->add_option("--max", lyap_max, "grid upper bound");

    // mpc
    std::string mpc_model, mpc_problem, mpc_x0, mpc_output, mpc_summary;
    std::string mpc_system = "example4";
    double mpc_c = -0.5, mpc_d = -0.5;
    int mpc_steps = 100;
    CLI::App* mpc = app.add_subcommand("mpc", "Closed-loop lifted MPC");
    mpc->add_option("--model", mpc_model, "bilinear model JSON")->required();
    mpc->add_option("--problem", mpc_problem, "MPC problem JSON")->required();
    mpc->add_option("--x0", mpc_x0, "initial state")->required();
    mpc->add_option("--steps", mpc_steps, "closed-loop steps");
    mpc->add_option("--output", mpc_output, "closed-loop log CSV");
    mpc->add_option("--summary", mpc_summary, "summary JSON");
    mpc->add_option("--system", mpc_system, "plant (example4)");
    mpc->add_option("--c", mpc_c, "plant parameter c");
    mpc->add_option("--d", mpc_d, "plant parameter d");

    // simulate
    std::string sim_system, sim_x0 = "1,1", sim_u, sim_output;
    double sim_a = 0.9, sim_b = 0.8, sim_c = -0.5, sim_d = -0.5;
    double sim_t_end = 1.0, sim_dt = 1e-3;
    int sim_steps = 50;
    CLI::App* sim = app.add_subcommand("simulate", "Generate benchmark data");
    sim->add_option("--system", sim_system, "example1 | example4 | cubic")->required();
    sim->add_option("--a", sim_a, "example1 parameter a");
    sim->add_option("--b", sim_b, "example1 parameter b");
    sim->add_option("--c", sim_c, "example4 parameter c");
    sim->add_option("--d", sim_d, "example4 parameter d");
    sim->add_option("--x0", sim_x0, "initial state, comma separated");
    sim->add_option("--steps", sim_steps, "map iterations (example1)");
    sim->add_option("--t-end", sim_t_end, "integration horizon (ODE systems)");
    sim->add_option("--dt", sim_dt, "integration step (ODE systems)");
    sim->add_option("--u", sim_u, "constant input for example4");
    sim->add_option("--output", sim_output, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadFlags;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_opt, command_line);
        if (pred->parsed())
            return cmd_predict(predict_model, predict_x0, predict_steps,
                               predict_output, predict_compare);
        if (spect->parsed()) return cmd_spectrum(spectrum_model, spectrum_modes);
        if (lyap->parsed())
            return cmd_lyapunov(lyap_model, lyap_grid, lyap_min, lyap_max,
                                lyap_output);
        if (mpc->parsed())
            return cmd_mpc(mpc_model, mpc_problem, mpc_x0, mpc_steps, mpc_output,
                           mpc_summary, mpc_system, mpc_c, mpc_d);
        if (sim->parsed())
            return cmd_simulate(sim_system, sim_a, sim_b, sim_c, sim_d, sim_x0,
                                sim_steps, sim_t_end, sim_dt, sim_u, sim_output);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParseFailure;
    } catch (const InstabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInstability;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadFlags;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFitFailure;
    }
    return kExitBadFlags;
}
