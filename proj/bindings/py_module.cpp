#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "koopkit/analysis.hpp"
#include "koopkit/io.hpp"

namespace py = pybind11;
using namespace koop;

namespace {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Marginal: return "marginal";
        case Verdict::Unstable: return "unstable";
    }
    return "unknown";
}

std::string kind_name(TimeKind k) {
    return k == TimeKind::Discrete ? "discrete" : "continuous";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Koopman operator model fitting, spectral analysis and lifted MPC";

    py::register_exception<Error>(m, "KoopkitError");

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init<RealVector, RealMatrix, std::optional<RealMatrix>>(),
             py::arg("times"), py::arg("states"), py::arg("inputs") = std::nullopt)
        .def_property_readonly("times", &Trajectory::times)
        .def_property_readonly("states", &Trajectory::states)
        .def_property_readonly("inputs", &Trajectory::inputs)
        .def_property_readonly("samples", &Trajectory::samples)
        .def_property_readonly("dimension", &Trajectory::dimension);

    py::class_<Dictionary>(m, "Dictionary")
        .def("__call__", &Dictionary::eval, py::arg("x"))
        .def("jacobian", &Dictionary::jacobian, py::arg("x"))
        .def("lift", &Dictionary::lift, py::arg("states"))
        .def_property_readonly("labels", &Dictionary::labels)
        .def_property_readonly("input_dim", &Dictionary::input_dim)
        .def_property_readonly("output_dim", &Dictionary::output_dim);

    m.def("monomial_dictionary", &monomial_dictionary, py::arg("n"),
          py::arg("max_degree"), py::arg("include_constant") = false);
    m.def("identity_dictionary", &identity_dictionary, py::arg("n"));
    m.def("monomial_range_dictionary", &monomial_range_dictionary, py::arg("n"),
          py::arg("min_degree"), py::arg("max_degree"));
    m.def("polynomial_dictionary", &polynomial_dictionary, py::arg("n"),
          py::arg("exponents"), py::arg("coefficients"),
          py::arg("labels") = std::vector<std::string>{});

    py::class_<DiscreteMap>(m, "DiscreteMap")
        .def("step", [](const DiscreteMap& map, const RealVector& x) {
            return map.step(x);
        })
        .def_readonly("dimension", &DiscreteMap::dimension)
        .def_readonly("name", &DiscreteMap::name)
        .def_readonly("params", &DiscreteMap::params);

    py::class_<VectorField>(m, "VectorField")
        .def("__call__", [](const VectorField& f, const RealVector& x) {
            return f.eval(x);
        })
        .def_readonly("dimension", &VectorField::dimension)
        .def_readonly("name", &VectorField::name);

    py::class_<ControlAffineSystem>(m, "ControlAffineSystem")
        .def("rhs", &ControlAffineSystem::rhs, py::arg("x"), py::arg("u"))
        .def_property_readonly("state_dim", &ControlAffineSystem::state_dim)
        .def_property_readonly("input_dim", &ControlAffineSystem::input_dim);

    m.def("example1_map", &example1_map, py::arg("a"), py::arg("b"));
    m.def("example4_system", &example4_system, py::arg("c"), py::arg("d"));
    m.def("cubic_decay", &cubic_decay);

    m.def("simulate_map", &simulate_map, py::arg("map"), py::arg("x0"), py::arg("k"));
    m.def("integrate_rk4",
          py::overload_cast<const VectorField&, const RealVector&, double, double>(
              &integrate_rk4),
          py::arg("field"), py::arg("x0"), py::arg("t_end"), py::arg("dt"));
    m.def("integrate_rk4",
          py::overload_cast<const ControlAffineSystem&, const RealVector&, double,
                            double, const InputSignal&>(&integrate_rk4),
          py::arg("system"), py::arg("x0"), py::arg("t_end"), py::arg("dt"),
          py::arg("u"));

    py::class_<SnapshotPair>(m, "SnapshotPair")
        .def(py::init([](RealMatrix x, RealMatrix xplus) {
                 return SnapshotPair{std::move(x), std::move(xplus)};
             }),
             py::arg("X"), py::arg("Xplus"))
        .def_readonly("X", &SnapshotPair::X)
        .def_readonly("Xplus", &SnapshotPair::Xplus);

    m.def("snapshot_pairs",
          [](const std::vector<Trajectory>& trajs) {
              return snapshot_pairs(std::span<const Trajectory>(trajs));
          },
          py::arg("trajectories"));

    py::class_<KoopmanModel>(m, "KoopmanModel")
        .def_readonly("A", &KoopmanModel::A)
        .def_readonly("C", &KoopmanModel::C)
        .def_readonly("ts", &KoopmanModel::ts)
        .def_readonly("warnings", &KoopmanModel::warnings)
        .def_readonly("linearity_residual", &KoopmanModel::linearity_residual)
        .def_readonly("reconstruction_residual",
                      &KoopmanModel::reconstruction_residual)
        .def_property_readonly("dictionary",
                               [](const KoopmanModel& m) { return m.dictionary; })
        .def_property_readonly(
            "time_kind", [](const KoopmanModel& m) { return kind_name(m.sampling); })
        .def("predict",
             [](const KoopmanModel& m, const RealVector& x0, int k) {
                 return predict(m, x0, k);
             },
             py::arg("x0"), py::arg("k"));

    py::class_<SpectralModel>(m, "SpectralModel")
        .def_readonly("transition", &SpectralModel::transition)
        .def_readonly("diagonal", &SpectralModel::diagonal)
        .def_readonly("eigenfunction_coeffs", &SpectralModel::eigenfunction_coeffs)
        .def_readonly("modes", &SpectralModel::modes)
        .def_property_readonly("eigenvalues", &SpectralModel::eigenvalues)
        .def_property_readonly(
            "time_kind", [](const SpectralModel& m) { return kind_name(m.time_kind); })
        .def("eigenfunctions", &SpectralModel::eigenfunctions, py::arg("x"))
        .def("predict",
             [](const SpectralModel& m, const RealVector& x0, int k) {
                 return predict(m, x0, k);
             },
             py::arg("x0"), py::arg("k"));

    m.def("fit_dmd", &fit_dmd, py::arg("pairs"), py::arg("rank") = std::nullopt);
    m.def("fit_edmd",
          py::overload_cast<const SnapshotPair&, const Dictionary&,
                            std::optional<OutputMap>>(&fit_edmd),
          py::arg("pairs"), py::arg("dictionary"),
          py::arg("outputs") = std::nullopt);
    m.def("fit_generator_edmd", &fit_generator_edmd, py::arg("states"),
          py::arg("derivatives"), py::arg("dictionary"),
          py::arg("outputs") = std::nullopt);
    m.def("hankel_dmd", &hankel_dmd, py::arg("series"), py::arg("depth"),
          py::arg("rank") = std::nullopt);
    m.def("extract_spectrum", &extract_spectrum, py::arg("model"));

    py::class_<Eigenpair>(m, "Eigenpair")
        .def_readonly("value", &Eigenpair::value)
        .def_readonly("label", &Eigenpair::label)
        .def_readonly("multi_index", &Eigenpair::multi_index)
        .def("__call__",
             [](const Eigenpair& p, const RealVector& x) { return p.function(x); });

    py::class_<EigenpairSet>(m, "EigenpairSet")
        .def_readonly("pairs", &EigenpairSet::pairs);

    py::class_<ConjugacyMap>(m, "ConjugacyMap")
        .def_readonly("coefficients", &ConjugacyMap::coefficients)
        .def_readonly("linear_part", &ConjugacyMap::linear_part)
        .def("residual", &ConjugacyMap::residual, py::arg("x"))
        .def("diffeomorphism", &ConjugacyMap::diffeomorphism, py::arg("x"));

    py::class_<ConjugacyFit>(m, "ConjugacyFit")
        .def_readonly("map", &ConjugacyFit::map)
        .def_readonly("eigenpairs", &ConjugacyFit::eigenpairs)
        .def_readonly("fit_residual", &ConjugacyFit::fit_residual)
        .def_readonly("poor_fit", &ConjugacyFit::poor_fit)
        .def_readonly("warnings", &ConjugacyFit::warnings);

    py::class_<ConjugacyOptions>(m, "ConjugacyOptions")
        .def(py::init<>())
        .def_readwrite("residual_tol", &ConjugacyOptions::residual_tol);

    m.def("fit_conjugacy",
          py::overload_cast<const DiscreteMap&, const RealMatrix&, const Dictionary&,
                            const RealMatrix&, const ConjugacyOptions&>(&fit_conjugacy),
          py::arg("map"), py::arg("linear_part"), py::arg("basis"),
          py::arg("samples"), py::arg("options") = ConjugacyOptions{});
    m.def("fit_conjugacy",
          py::overload_cast<const VectorField&, const RealMatrix&, const Dictionary&,
                            const RealMatrix&, const ConjugacyOptions&>(&fit_conjugacy),
          py::arg("field"), py::arg("linear_part"), py::arg("basis"),
          py::arg("samples"), py::arg("options") = ConjugacyOptions{});

    m.def("eigenpair_products", &eigenpair_products, py::arg("principles"),
          py::arg("max_total_degree"));
    m.def("spectral_from_eigenpairs", &spectral_from_eigenpairs, py::arg("pairs"),
          py::arg("state_samples"), py::arg("outputs") = std::nullopt,
          py::arg("ts") = 0.0);

    // analysis
    py::class_<StabilityReport>(m, "StabilityReport")
        .def_property_readonly(
            "overall", [](const StabilityReport& r) { return verdict_name(r.overall); })
        .def_readonly("margin", &StabilityReport::margin)
        .def_property_readonly("per_eigenvalue", [](const StabilityReport& r) {
            std::vector<std::string> out;
            for (const Verdict v : r.per_eigenvalue) out.push_back(verdict_name(v));
            return out;
        });
    m.def("classify_stability", &classify_stability, py::arg("spectral"),
          py::arg("tol") = 1e-9);

    py::class_<LyapunovCertificate>(m, "LyapunovCertificate")
        .def_property_readonly("P", &LyapunovCertificate::P)
        .def("value", &LyapunovCertificate::value, py::arg("x"))
        .def("eigenfunctions", &LyapunovCertificate::eigenfunctions, py::arg("x"));
    m.def("synthesize_lyapunov",
          py::overload_cast<const SpectralModel&>(&synthesize_lyapunov),
          py::arg("spectral"));
    m.def("synthesize_lyapunov",
          py::overload_cast<const SpectralModel&, const DiscreteMap&,
                            const RealMatrix&>(&synthesize_lyapunov),
          py::arg("spectral"), py::arg("map"), py::arg("witness_samples"));

    // control
    py::class_<BilinearLiftedModel>(m, "BilinearLiftedModel")
        .def_readonly("A", &BilinearLiftedModel::A)
        .def_readonly("B", &BilinearLiftedModel::B)
        .def_readonly("V", &BilinearLiftedModel::V)
        .def_readonly("fit_residual", &BilinearLiftedModel::fit_residual)
        .def_readonly("warnings", &BilinearLiftedModel::warnings)
        .def_property_readonly(
            "lifting", [](const BilinearLiftedModel& m) { return m.lifting; });
    m.def("lift_control_fields", &lift_control_fields, py::arg("system"),
          py::arg("lifting"), py::arg("samples"), py::arg("span_tol") = 1e-8);
    m.def("simulate_bilinear", &simulate_bilinear, py::arg("model"), py::arg("z0"),
          py::arg("u"), py::arg("ts"), py::arg("steps"));
    m.def("output_trajectory", &output_trajectory, py::arg("model"),
          py::arg("lifted"));

    py::class_<MpcProblem>(m, "MpcProblem")
        .def(py::init([](int horizon, RealMatrix q, RealMatrix r, RealVector lo,
                         RealVector hi, RealMatrix y_ref, double ts) {
                 return MpcProblem{horizon, std::move(q), std::move(r),
                                   std::move(lo), std::move(hi), std::move(y_ref),
                                   ts};
             }),
             py::arg("horizon"), py::arg("Q"), py::arg("R"), py::arg("u_lower"),
             py::arg("u_upper"), py::arg("y_ref"), py::arg("ts"));

    py::class_<MpcResult>(m, "MpcResult")
        .def_readonly("total_cost", &MpcResult::total_cost)
        .def_readonly("qp_nonconverged_steps", &MpcResult::qp_nonconverged_steps)
        .def_property_readonly(
            "closed_loop", [](const MpcResult& r) { return r.closed_loop; })
        .def_property_readonly("inputs", [](const MpcResult& r) {
            RealMatrix u(static_cast<Index>(r.steps.size()),
                         r.steps.empty() ? 0 : r.steps.front().input.size());
            for (size_t i = 0; i < r.steps.size(); ++i)
                u.row(static_cast<Index>(i)) = r.steps[i].input.transpose();
            return u;
        });
    m.def("run_mpc", &run_mpc, py::arg("system"), py::arg("model"),
          py::arg("problem"), py::arg("x0"), py::arg("total_steps"),
          py::arg("plant_substeps") = 10);

    // persistence
    py::class_<ModelProvenance>(m, "ModelProvenance")
        .def(py::init<>())
        .def_readwrite("command", &ModelProvenance::command)
        .def_readwrite("data_hash", &ModelProvenance::data_hash)
        .def_readwrite("timestamp", &ModelProvenance::timestamp);

    m.def("save_model",
          py::overload_cast<const std::filesystem::path&, const KoopmanModel&,
                            const ModelProvenance&>(&save_model),
          py::arg("path"), py::arg("model"),
          py::arg("provenance") = ModelProvenance{});
    m.def("save_model",
          py::overload_cast<const std::filesystem::path&, const SpectralModel&,
                            const ModelProvenance&>(&save_model),
          py::arg("path"), py::arg("model"),
          py::arg("provenance") = ModelProvenance{});
    m.def("save_model",
          py::overload_cast<const std::filesystem::path&, const BilinearLiftedModel&,
                            const ModelProvenance&>(&save_model),
          py::arg("path"), py::arg("model"),
          py::arg("provenance") = ModelProvenance{});
    m.def("load_model", [](const std::filesystem::path& path) -> py::object {
        const LoadedModel loaded = load_model(path);
        if (loaded.kind == ModelKind::Spectral) return py::cast(loaded.spectral());
        if (loaded.kind == ModelKind::Bilinear) return py::cast(loaded.bilinear());
        return py::cast(loaded.koopman());
    });

    py::class_<OutputMap>(m, "OutputMap")
        .def(py::init([](std::function<RealVector(const RealVector&)> fn, Index dim) {
                 return OutputMap{std::move(fn), dim};
             }),
             py::arg("fn"), py::arg("dim"));

    m.def("read_trajectory_csv", &read_trajectory_csv, py::arg("path"));
    m.def("write_trajectory_csv",
          py::overload_cast<const std::filesystem::path&, const Trajectory&>(
              &write_trajectory_csv),
          py::arg("path"), py::arg("trajectory"));

    m.attr("__version__") = "0.1.0";
}
