#pragma once

#include "marom/align.hpp"
#include "marom/fields.hpp"
#include "marom/kriging.hpp"
#include "marom/pod.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace marom {

struct TrainConfig {
    double ric_threshold = 0.999999;
    std::optional<Index> k_override;
    KrigingSettings kriging;
    std::uint64_t seed = 0;
};

struct Provenance {
    std::string hi_hash;
    std::string lo_hash;  // empty for single-fidelity models
    std::string hi_fidelity;
    std::string lo_fidelity;
    Index n_hi = 0;
    Index m_lo = 0;
    std::uint64_t seed = 0;
    /// Taken from SOURCE_DATE_EPOCH when set, so bundles stay reproducible.
    std::optional<std::string> created;
    std::vector<std::string> warnings;
};

/// Latent dimensions chosen for a multi-fidelity fit.
struct LatentDims {
    Index k_hi = 0;  // RIC rank of the high-fidelity data
    Index k_lo = 0;  // RIC rank of the low-fidelity data
    Index k = 0;     // common latent dimension
    Index k_lo_modes = 0;  // low-fidelity modes actually kept (<= k)
};

/// Common latent dimension: max of the two RIC ranks, capped by the
/// high-fidelity numerical rank. Low-fidelity data of lower rank contribute
/// min(k, rank_lo) modes and zero coordinates in the remaining directions.
LatentDims common_latent_dim(Index k_hi, Index k_lo, Index rank_hi, Index rank_lo,
                             std::optional<Index> k_override = std::nullopt);

struct MaRomModel {
    PodBasis hi_basis;
    PodBasis lo_basis;
    ProcrustesTransform transform;
    std::vector<HierarchicalKrigingModel> latent_models;
    LatentDims dims;
    TrainConfig config;
    Provenance provenance;
};

struct SfRomModel {
    PodBasis basis;
    std::vector<KrigingModel> latent_models;
    TrainConfig config;
    Provenance provenance;
};

MaRomModel train_marom(const Dataset& hi, const Dataset& lo, const TrainConfig& config);
SfRomModel train_sfrom(const Dataset& hi, const TrainConfig& config);

/// Latent-coordinate predictions at one design.
Eigen::VectorXd predict_latent(const MaRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);
Eigen::VectorXd predict_latent(const SfRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);

/// Field prediction (length d) at design p.
Eigen::VectorXd predict_marom(const MaRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);
Eigen::VectorXd predict_sfrom(const SfRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);

/// One predicted field per column of designs (b x N).
Eigen::MatrixXd predict_fields(const MaRomModel& model, const Eigen::MatrixXd& designs);
Eigen::MatrixXd predict_fields(const SfRomModel& model, const Eigen::MatrixXd& designs);

using RomModel = std::variant<MaRomModel, SfRomModel>;

Eigen::MatrixXd predict_fields(const RomModel& model, const Eigen::MatrixXd& designs);
const PodBasis& output_basis(const RomModel& model);
Index design_dim(const RomModel& model);

/// Model bundle: manifest.json (format "marom-v1") plus basis CSVs and one
/// JSON file per latent model.
inline constexpr const char* kBundleFormat = "marom-v1";
void save_bundle(const RomModel& model, const std::filesystem::path& dir);
RomModel load_bundle(const std::filesystem::path& dir);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace marom
