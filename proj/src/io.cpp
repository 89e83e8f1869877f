#include "koopkit/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace koop {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& field, const char* context) {
    double value{};
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw IoError(std::string(context) + ": cannot parse number '" + field + "'");
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "t")
        throw IoError("trajectory header must start with 't': " + path.string());
    Index n = 0, m = 0;
    for (size_t i = 1; i < header.size(); ++i) {
        if (header[i].rfind('x', 0) == 0 && m == 0)
            ++n;
        else if (header[i].rfind('u', 0) == 0)
            ++m;
        else
            throw IoError("unexpected trajectory column '" + header[i] + "'");
    }
    if (n == 0) throw IoError("trajectory file has no state columns");

    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> input_values;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (static_cast<Index>(fields.size()) != 1 + n + m)
            throw IoError("trajectory row has wrong column count");
        times.push_back(parse_double(fields[0], "trajectory"));
        for (Index i = 0; i < n; ++i)
            values.push_back(parse_double(fields[static_cast<size_t>(1 + i)], "trajectory"));
        for (Index i = 0; i < m; ++i)
            input_values.push_back(
                parse_double(fields[static_cast<size_t>(1 + n + i)], "trajectory"));
    }
    const Index rows = static_cast<Index>(times.size());
    if (rows == 0) throw IoError("trajectory file has no data rows");

    RealVector t(rows);
    RealMatrix states(rows, n);
    for (Index r = 0; r < rows; ++r) {
        t(r) = times[static_cast<size_t>(r)];
        for (Index c = 0; c < n; ++c)
            states(r, c) = values[static_cast<size_t>(r * n + c)];
    }
    try {
        if (m == 0) return Trajectory(t, states);
        RealMatrix inputs(rows, m);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < m; ++c)
                inputs(r, c) = input_values[static_cast<size_t>(r * m + c)];
        return Trajectory(t, states, inputs);
    } catch (const Error& e) {
        throw IoError("invalid trajectory data in " + path.string() + ": " + e.what());
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trajectory file: " + path.string());
    write_trajectory_csv(out, traj);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t";
    for (Index i = 0; i < traj.dimension(); ++i) out << ",x" << (i + 1);
    const Index m = traj.inputs() ? traj.inputs()->cols() : 0;
    for (Index i = 0; i < m; ++i) out << ",u" << (i + 1);
    out << "\n";
    for (Index r = 0; r < traj.samples(); ++r) {
        out << format_double(traj.times()(r));
        for (Index c = 0; c < traj.dimension(); ++c)
            out << "," << format_double(traj.states()(r, c));
        for (Index c = 0; c < m; ++c)
            out << "," << format_double((*traj.inputs())(r, c));
        out << "\n";
    }
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for hashing: " + path.string());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char c;
    while (in.get(c)) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Dmd: return "dmd";
        case ModelKind::Edmd: return "edmd";
        case ModelKind::Generator: return "generator";
        case ModelKind::Spectral: return "spectral";
        case ModelKind::Bilinear: return "bilinear";
    }
    return "unknown";
}

namespace {

json real_matrix_to_json(const RealMatrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

RealMatrix real_matrix_from_json(const json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    RealMatrix m(rows, cols);
    const auto& data = j.at("data");
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = data.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<double>();
    return m;
}

json complex_matrix_to_json(const ComplexMatrix& m) {
    json re = json::array(), im = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json re_row = json::array(), im_row = json::array();
        for (Index c = 0; c < m.cols(); ++c) {
            re_row.push_back(m(r, c).real());
            im_row.push_back(m(r, c).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()},
                {"real", std::move(re)}, {"imag", std::move(im)}};
}

ComplexMatrix complex_matrix_from_json(const json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    ComplexMatrix m(rows, cols);
    const auto& re = j.at("real");
    const auto& im = j.at("imag");
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = {re.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<double>(),
                       im.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<double>()};
    return m;
}

json dictionary_to_json(const Dictionary& dict) {
    if (!dict.spec())
        throw IoError("model dictionary has no serializable description");
    json j;
    if (const auto* m = std::get_if<MonomialSpec>(&*dict.spec())) {
        j["type"] = "monomials";
        j["n"] = m->n;
        j["degree"] = m->max_degree;
        j["include_constant"] = m->include_constant;
    } else if (const auto* i = std::get_if<IdentitySpec>(&*dict.spec())) {
        j["type"] = "identity";
        j["n"] = i->n;
    } else {
        const auto& p = std::get<PolynomialSpec>(*dict.spec());
        j["type"] = "polynomial";
        j["n"] = p.n;
        j["exponents"] = p.exponents;
        j["coefficients"] = real_matrix_to_json(p.coefficients);
        j["labels"] = dict.labels();
    }
    return j;
}

Dictionary dictionary_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "monomials")
        return monomial_dictionary(j.at("n").get<Index>(), j.at("degree").get<int>(),
                                   j.at("include_constant").get<bool>());
    if (type == "identity") return identity_dictionary(j.at("n").get<Index>());
    if (type == "polynomial")
        return polynomial_dictionary(
            j.at("n").get<Index>(),
            j.at("exponents").get<std::vector<std::vector<int>>>(),
            real_matrix_from_json(j.at("coefficients")),
            j.at("labels").get<std::vector<std::string>>());
    throw IoError("unknown dictionary type '" + type + "'");
}

json provenance_to_json(const ModelProvenance& p) {
    return json{{"command", p.command}, {"data_hash", p.data_hash},
                {"timestamp", p.timestamp}};
}

ModelProvenance provenance_from_json(const json& j) {
    ModelProvenance p;
    if (j.contains("provenance")) {
        const auto& pj = j.at("provenance");
        p.command = pj.value("command", "");
        p.data_hash = pj.value("data_hash", "");
        p.timestamp = pj.value("timestamp", "");
    }
    return p;
}

void write_model_json(const std::filesystem::path& path, json j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out << j.dump(2) << "\n";
}

json common_header(ModelKind kind, double ts, TimeKind time_kind,
                   const ModelProvenance& provenance) {
    return json{
        {"schema_version", "1"},
        {"kind", to_string(kind)},
        {"sampling_time", ts},
        {"time_kind", time_kind == TimeKind::Discrete ? "discrete" : "continuous"},
        {"provenance", provenance_to_json(provenance)},
    };
}

ModelKind koopman_kind(const KoopmanModel& model) {
    if (model.sampling == TimeKind::Continuous) return ModelKind::Generator;
    if (model.dictionary.spec() &&
        std::holds_alternative<IdentitySpec>(*model.dictionary.spec()))
        return ModelKind::Dmd;
    return ModelKind::Edmd;
}

}  // namespace

void save_model(const std::filesystem::path& path, const KoopmanModel& model,
                const ModelProvenance& provenance) {
    json j = common_header(koopman_kind(model), model.ts, model.sampling, provenance);
    j["dictionary"] = dictionary_to_json(model.dictionary);
    j["matrices"] = json{{"A", real_matrix_to_json(model.A)},
                         {"C", real_matrix_to_json(model.C)}};
    j["residuals"] = json{{"linearity", model.linearity_residual},
                          {"reconstruction", model.reconstruction_residual}};
    j["warnings"] = model.warnings;
    write_model_json(path, std::move(j));
}

void save_model(const std::filesystem::path& path, const SpectralModel& model,
                const ModelProvenance& provenance) {
    json j = common_header(ModelKind::Spectral, model.ts, model.time_kind, provenance);
    j["dictionary"] = dictionary_to_json(model.dictionary);
    j["matrices"] = json{{"transition", complex_matrix_to_json(model.transition)},
                         {"W", complex_matrix_to_json(model.eigenfunction_coeffs)},
                         {"V", complex_matrix_to_json(model.modes)}};
    j["diagonal"] = model.diagonal;
    write_model_json(path, std::move(j));
}

void save_model(const std::filesystem::path& path, const BilinearLiftedModel& model,
                const ModelProvenance& provenance) {
    json j = common_header(ModelKind::Bilinear, 0.0, TimeKind::Continuous, provenance);
    j["dictionary"] = dictionary_to_json(model.lifting);
    json bs = json::array();
    for (const auto& b : model.B) bs.push_back(real_matrix_to_json(b));
    j["matrices"] = json{{"A", real_matrix_to_json(model.A)},
                         {"B", std::move(bs)},
                         {"V", real_matrix_to_json(model.V)}};
    j["fit_residual"] = model.fit_residual;
    j["warnings"] = model.warnings;
    write_model_json(path, std::move(j));
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid model JSON in " + path.string() + ": " + e.what());
    }
    try {
        const std::string kind = j.at("kind").get<std::string>();
        const std::string time_kind_str = j.at("time_kind").get<std::string>();
        const TimeKind time_kind = time_kind_str == "continuous"
                                       ? TimeKind::Continuous
                                       : TimeKind::Discrete;
        const double ts = j.at("sampling_time").get<double>();
        const ModelProvenance provenance = provenance_from_json(j);
        Dictionary dict = dictionary_from_json(j.at("dictionary"));

        if (kind == "dmd" || kind == "edmd" || kind == "generator") {
            KoopmanModel model{std::move(dict),
                               real_matrix_from_json(j.at("matrices").at("A")),
                               real_matrix_from_json(j.at("matrices").at("C")),
                               time_kind, ts};
            if (j.contains("residuals")) {
                model.linearity_residual = j["residuals"].value("linearity", 0.0);
                model.reconstruction_residual =
                    j["residuals"].value("reconstruction", 0.0);
            }
            if (j.contains("warnings"))
                model.warnings = j["warnings"].get<std::vector<std::string>>();
            const ModelKind mk = kind == "dmd" ? ModelKind::Dmd
                                 : kind == "edmd" ? ModelKind::Edmd
                                                  : ModelKind::Generator;
            return LoadedModel{mk, std::move(model), provenance};
        }
        if (kind == "spectral") {
            SpectralModel model{
                complex_matrix_from_json(j.at("matrices").at("transition")),
                j.value("diagonal", true),
                complex_matrix_from_json(j.at("matrices").at("W")),
                complex_matrix_from_json(j.at("matrices").at("V")),
                std::move(dict), time_kind, ts};
            return LoadedModel{ModelKind::Spectral, std::move(model), provenance};
        }
        if (kind == "bilinear") {
            BilinearLiftedModel model;
            model.A = real_matrix_from_json(j.at("matrices").at("A"));
            for (const auto& bj : j.at("matrices").at("B"))
                model.B.push_back(real_matrix_from_json(bj));
            model.V = real_matrix_from_json(j.at("matrices").at("V"));
            model.lifting = std::move(dict);
            model.fit_residual = j.value("fit_residual", 0.0);
            if (j.contains("warnings"))
                model.warnings = j["warnings"].get<std::vector<std::string>>();
            return LoadedModel{ModelKind::Bilinear, std::move(model), provenance};
        }
        throw IoError("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw IoError("malformed model file " + path.string() + ": " + e.what());
    }
}

}  // namespace koop
