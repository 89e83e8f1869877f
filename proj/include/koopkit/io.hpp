#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "koopkit/control.hpp"

namespace koop {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// Trajectory CSV: header "t,x1,...,xn[,u1,...,um]", comma separator,
/// '.' decimal point, no locale dependence.
Trajectory read_trajectory_csv(const std::filesystem::path& path);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string hash_file(const std::filesystem::path& path);

struct ModelProvenance {
    std::string command;
    std::string data_hash;
    std::string timestamp;
};

enum class ModelKind { Dmd, Edmd, Generator, Spectral, Bilinear };

std::string to_string(ModelKind kind);

struct LoadedModel {
    ModelKind kind;
    std::variant<KoopmanModel, SpectralModel, BilinearLiftedModel> model;
    ModelProvenance provenance;

    const KoopmanModel& koopman() const { return std::get<KoopmanModel>(model); }
    const SpectralModel& spectral() const { return std::get<SpectralModel>(model); }
    const BilinearLiftedModel& bilinear() const {
        return std::get<BilinearLiftedModel>(model);
    }
};

/// Model files are canonical JSON: sorted keys, shortest round-trip float
/// formatting, so save -> load -> save is byte identical. Dictionaries must
/// carry a serializable spec (monomial, identity or polynomial).
void save_model(const std::filesystem::path& path, const KoopmanModel& model,
                const ModelProvenance& provenance = {});
void save_model(const std::filesystem::path& path, const SpectralModel& model,
                const ModelProvenance& provenance = {});
void save_model(const std::filesystem::path& path, const BilinearLiftedModel& model,
                const ModelProvenance& provenance = {});

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace koop
