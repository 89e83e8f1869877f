#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "koopkit/io.hpp"

using namespace koop;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("koopkit_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

KoopmanModel benchmark_model() {
    const DiscreteMap map = example1_map(0.9, 0.8);
    std::mt19937 rng(501);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SnapshotPair pairs;
    pairs.X.resize(2, 40);
    pairs.Xplus.resize(2, 40);
    for (Index i = 0; i < 40; ++i) {
        pairs.X(0, i) = dist(rng);
        pairs.X(1, i) = dist(rng);
        pairs.Xplus.col(i) = map.step(pairs.X.col(i));
    }
    std::vector<std::vector<int>> exps = {{1, 0}, {0, 1}, {2, 0}};
    return fit_edmd(pairs, polynomial_dictionary(
                               2, exps, RealMatrix(RealMatrix::Identity(3, 3)),
                               {"x1", "x2", "x1^2"}));
}

}  // namespace

TEST_CASE("format_double: round trips") {
    std::mt19937 rng(502);
    std::uniform_real_distribution<double> dist(-1e6, 1e6);
    for (int i = 0; i < 200; ++i) {
        const double x = dist(rng) * std::pow(10.0, (i % 17) - 8);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("trajectory csv: exact round trip") {
    TempDir tmp;
    const DiscreteMap map = example1_map(0.9, 0.8);
    RealVector x0(2);
    x0 << 1.0, 1.0;
    const Trajectory traj = simulate_map(map, x0, 25);

    const fs::path first = tmp.path / "a.csv";
    write_trajectory_csv(first, traj);
    const Trajectory back = read_trajectory_csv(first);
    CHECK((back.states() - traj.states()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.times() - traj.times()).cwiseAbs().maxCoeff() == 0.0);

    const fs::path second = tmp.path / "b.csv";
    write_trajectory_csv(second, back);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("trajectory csv: inputs column round trip") {
    TempDir tmp;
    const ControlAffineSystem sys = example4_system(-0.5, -0.5);
    RealVector x0(2);
    x0 << 0.4, 0.2;
    const Trajectory traj = integrate_rk4(sys, x0, 0.5, 0.1, [](double t) {
        RealVector u(2);
        u << 0.1 * t, -0.2;
        return u;
    });
    const fs::path p = tmp.path / "u.csv";
    write_trajectory_csv(p, traj);
    const Trajectory back = read_trajectory_csv(p);
    REQUIRE(back.inputs().has_value());
    CHECK((*back.inputs() - *traj.inputs()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trajectory csv: parse failures") {
    TempDir tmp;
    CHECK_THROWS_AS(read_trajectory_csv(tmp.path / "missing.csv"), IoError);

    const fs::path bad_header = tmp.path / "h.csv";
    std::ofstream(bad_header) << "time,x1\n0,1\n";
    CHECK_THROWS_AS(read_trajectory_csv(bad_header), IoError);

    const fs::path bad_number = tmp.path / "n.csv";
    std::ofstream(bad_number) << "t,x1\n0,abc\n";
    CHECK_THROWS_AS(read_trajectory_csv(bad_number), IoError);

    const fs::path bad_width = tmp.path / "w.csv";
    std::ofstream(bad_width) << "t,x1\n0,1,2\n";
    CHECK_THROWS_AS(read_trajectory_csv(bad_width), IoError);
}

TEST_CASE("model file: koopman round trip is byte identical") {
    TempDir tmp;
    const KoopmanModel model = benchmark_model();
    const fs::path first = tmp.path / "m.json";
    save_model(first, model, {"fit --method edmd", "0123456789abcdef",
                              "2026-01-01T00:00:00Z"});

    const LoadedModel loaded = load_model(first);
    CHECK(loaded.kind == ModelKind::Edmd);
    const KoopmanModel& back = loaded.koopman();
    CHECK(std::memcmp(back.A.data(), model.A.data(), sizeof(double) * 9) == 0);
    CHECK(std::memcmp(back.C.data(), model.C.data(), sizeof(double) * 6) == 0);
    CHECK(loaded.provenance.command == "fit --method edmd");

    // dictionary behavior is reproduced exactly
    RealVector x(2);
    x << 0.37, -0.81;
    CHECK((back.dictionary.eval(x) - model.dictionary.eval(x)).norm() == 0.0);

    const fs::path second = tmp.path / "m2.json";
    save_model(second, back, loaded.provenance);
    CHECK(slurp(first) == slurp(second));
}

TEST_CASE("model file: spectral and bilinear round trips") {
    TempDir tmp;
    const SpectralModel spec = extract_spectrum(benchmark_model());
    const fs::path sp = tmp.path / "s.json";
    save_model(sp, spec);
    const LoadedModel sloaded = load_model(sp);
    CHECK(sloaded.kind == ModelKind::Spectral);
    CHECK((sloaded.spectral().transition - spec.transition).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sloaded.spectral().eigenfunction_coeffs - spec.eigenfunction_coeffs)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    const fs::path sp2 = tmp.path / "s2.json";
    save_model(sp2, sloaded.spectral(), sloaded.provenance);
    CHECK(slurp(sp) == slurp(sp2));

    std::vector<std::vector<int>> exps = {{1, 0}, {0, 1}, {2, 0}, {0, 0}};
    RealMatrix coef(4, 4);
    coef << 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1;
    std::mt19937 rng(503);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    RealMatrix samples(2, 60);
    for (Index i = 0; i < 60; ++i) {
        samples(0, i) = dist(rng);
        samples(1, i) = dist(rng);
    }
    const BilinearLiftedModel bil = lift_control_fields(
        example4_system(-0.5, -0.5),
        polynomial_dictionary(2, exps, coef, {"x1", "x2+x1^2", "x1^2", "1"}),
        samples);
    const fs::path bp = tmp.path / "b.json";
    save_model(bp, bil);
    const LoadedModel bloaded = load_model(bp);
    CHECK(bloaded.kind == ModelKind::Bilinear);
    CHECK((bloaded.bilinear().A - bil.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((bloaded.bilinear().B[0] - bil.B[0]).cwiseAbs().maxCoeff() == 0.0);
    const fs::path bp2 = tmp.path / "b2.json";
    save_model(bp2, bloaded.bilinear(), bloaded.provenance);
    CHECK(slurp(bp) == slurp(bp2));
}

TEST_CASE("model file: loading rejects malformed input") {
    TempDir tmp;
    CHECK_THROWS_AS(load_model(tmp.path / "missing.json"), IoError);

    const fs::path garbage = tmp.path / "g.json";
    std::ofstream(garbage) << "not json";
    CHECK_THROWS_AS(load_model(garbage), IoError);

    const fs::path wrong_kind = tmp.path / "k.json";
    std::ofstream(wrong_kind)
        << R"({"kind":"mystery","time_kind":"discrete","sampling_time":0,)"
        << R"("dictionary":{"type":"identity","n":1}})";
    CHECK_THROWS_AS(load_model(wrong_kind), IoError);
}

TEST_CASE("model file: custom dictionaries are rejected at save") {
    TempDir tmp;
    std::vector<std::function<double(const RealVector&)>> fns = {
        [](const RealVector& x) { return std::sin(x(0)); }};
    std::vector<std::function<RealVector(const RealVector&)>> grads = {
        [](const RealVector& x) {
            RealVector g(1);
            g << std::cos(x(0));
            return g;
        }};
    KoopmanModel model{custom_dictionary(fns, grads, {"sin"}, 1),
                       RealMatrix::Identity(1, 1), RealMatrix::Identity(1, 1)};
    CHECK_THROWS_AS(save_model(tmp.path / "c.json", model), IoError);
}

TEST_CASE("hash_file: deterministic content hash") {
    TempDir tmp;
    const fs::path p = tmp.path / "data.txt";
    std::ofstream(p) << "koopman";
    const std::string h1 = hash_file(p);
    CHECK(h1.size() == 16);
    CHECK(h1 == hash_file(p));
    std::ofstream(p, std::ios::app) << "!";
    CHECK(h1 != hash_file(p));
}
