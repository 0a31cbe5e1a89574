#include "marom/marom.hpp"

#include "marom/error.hpp"
#include "marom/log.hpp"
#include "marom/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cstdlib>
#include <set>

namespace marom {
namespace {

std::optional<std::string> creation_stamp() {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) return std::string(epoch);
    return std::nullopt;
}

KrigingSettings latent_settings(const TrainConfig& config, std::uint64_t stream) {
    KrigingSettings s = config.kriging;
    s.seed = derive_seed(config.seed, stream);
    return s;
}

// Drops later columns that repeat an earlier design; returns kept indices.
std::vector<Index> distinct_columns(const DesignMatrix& designs, std::vector<std::string>& warnings) {
    std::set<Index> dropped;
    for (const auto& [i, j] : designs.duplicate_pairs())
        if (!dropped.count(i)) dropped.insert(j);
    std::vector<Index> keep;
    for (Index c = 0; c < designs.samples(); ++c)
        if (!dropped.count(c)) keep.push_back(c);
    if (!dropped.empty()) {
        const std::string msg = "low-fidelity designs repeat " + std::to_string(dropped.size()) +
                                " point(s); keeping the first occurrence of each";
        log::warn(msg);
        warnings.push_back(msg);
    }
    return keep;
}

Index numerical_rank(const Eigen::MatrixXd& x) {
    if (x.cols() < 2) throw DataError("POD needs at least 2 snapshots, got " + std::to_string(x.cols()));
    const Eigen::VectorXd sigma = Eigen::BDCSVD<Eigen::MatrixXd>(center(x).values).singularValues();
    Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > kRankCutoff * sigma(0) && sigma(rank) > 0.0) ++rank;
    return rank;
}

}  // namespace

LatentDims common_latent_dim(Index k_hi, Index k_lo, Index rank_hi, Index rank_lo, std::optional<Index> k_override) {
    LatentDims d{k_hi, k_lo, 0, 0};
    if (k_override) {
        if (*k_override < 1) throw UsageError("latent dimension override must be at least 1");
        if (*k_override > rank_hi)
            throw NumericalError("latent dimension override " + std::to_string(*k_override) +
                                 " exceeds the high-fidelity numerical rank " + std::to_string(rank_hi));
        d.k = *k_override;
    } else {
        d.k = std::min(std::max(k_hi, k_lo), rank_hi);
    }
    d.k_lo_modes = std::min(d.k, rank_lo);
    return d;
}

MaRomModel train_marom(const Dataset& hi, const Dataset& lo_in, const TrainConfig& config) {
    const Index n = hi.samples();
    if (n < 2) throw DataError("MA-ROM training needs at least 2 high-fidelity samples, got " + std::to_string(n));
    if (hi.designs.params() != lo_in.designs.params())
        throw DataError("high-fidelity designs have " + std::to_string(hi.designs.params()) +
                        " parameters, low-fidelity designs have " + std::to_string(lo_in.designs.params()));
    if (!(hi.designs.bounds() == lo_in.designs.bounds()))
        throw DataError("high- and low-fidelity design bounds differ; both fidelities must share one design space");
    if (const auto d = hi.designs.duplicate_pairs(); !d.empty())
        throw DataError("high-fidelity designs repeat a point (columns " + std::to_string(d.front().first) + " and " +
                        std::to_string(d.front().second) + ")");

    MaRomModel model;
    model.config = config;
    model.provenance.hi_hash = content_hash(hi);
    model.provenance.lo_hash = content_hash(lo_in);
    model.provenance.hi_fidelity = hi.fidelity;
    model.provenance.lo_fidelity = lo_in.fidelity;
    model.provenance.seed = config.seed;
    model.provenance.created = creation_stamp();

    const Dataset lo_unique = lo_in.select(distinct_columns(lo_in.designs, model.provenance.warnings));
    const LinkedSplit split = split_linked(lo_unique, hi.designs);
    const Dataset lo = lo_unique.select(split.permutation);  // linked columns first, in hi order
    const Index m = lo.samples();
    model.provenance.n_hi = n;
    model.provenance.m_lo = m;
    if (m == n) {
        const std::string msg = "no unlinked low-fidelity samples: the low-fidelity data add no new design sites";
        log::warn(msg);
        model.provenance.warnings.push_back(msg);
    }

    // POD of each fidelity, then one common latent dimension.
    const Eigen::MatrixXd& x = hi.snapshots.values();
    const Eigen::MatrixXd& y = lo.snapshots.values();
    const PodBasis hi_ric = fit_pod(x, RicThreshold{config.ric_threshold});
    const Index rank_lo = numerical_rank(y);
    const Index k_lo = rank_lo > 0 ? fit_pod(y, RicThreshold{config.ric_threshold}).k() : 0;
    model.dims = common_latent_dim(hi_ric.k(), k_lo, hi_ric.rank(), rank_lo, config.k_override);
    const Index k = model.dims.k;
    if (model.dims.k_lo_modes < 1) throw NumericalError("low-fidelity snapshots have zero variance");
    model.hi_basis = k == hi_ric.k() ? hi_ric : fit_pod(x, FixedRank{k});
    model.lo_basis = fit_pod(y, FixedRank{model.dims.k_lo_modes});
    log::debug("latent dims: k_hi=" + std::to_string(model.dims.k_hi) + " k_lo=" + std::to_string(model.dims.k_lo) +
               " k=" + std::to_string(k) + " lo modes=" + std::to_string(model.dims.k_lo_modes));

    const Eigen::MatrixXd z_hi = project(model.hi_basis, x);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, m);
    w.topRows(model.dims.k_lo_modes) = project(model.lo_basis, y);

    model.transform = fit_procrustes(z_hi, w.leftCols(n));
    const Eigen::MatrixXd z_lo = apply_transform(model.transform, w);

    model.latent_models.reserve(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        const KrigingModel lo_model =
            fit_kriging(lo.designs, z_lo.row(i).transpose(), latent_settings(config, 2 * static_cast<std::uint64_t>(i)));
        model.latent_models.push_back(fit_hk(lo_model, hi.designs, z_hi.row(i).transpose(),
                                             latent_settings(config, 2 * static_cast<std::uint64_t>(i) + 1)));
    }
    return model;
}

SfRomModel train_sfrom(const Dataset& hi, const TrainConfig& config) {
    const Index n = hi.samples();
    if (n < 2) throw DataError("ROM training needs at least 2 samples, got " + std::to_string(n));
    SfRomModel model;
    model.config = config;
    model.provenance.hi_hash = content_hash(hi);
    model.provenance.hi_fidelity = hi.fidelity;
    model.provenance.n_hi = n;
    model.provenance.seed = config.seed;
    model.provenance.created = creation_stamp();

    const Eigen::MatrixXd& x = hi.snapshots.values();
    model.basis = config.k_override ? fit_pod(x, FixedRank{*config.k_override})
                                    : fit_pod(x, RicThreshold{config.ric_threshold});
    const Eigen::MatrixXd z = project(model.basis, x);
    model.latent_models.reserve(static_cast<std::size_t>(model.basis.k()));
    for (Index i = 0; i < model.basis.k(); ++i)
        model.latent_models.push_back(
            fit_kriging(hi.designs, z.row(i).transpose(), latent_settings(config, 2 * static_cast<std::uint64_t>(i))));
    return model;
}

Eigen::VectorXd predict_latent(const MaRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    Eigen::VectorXd z(static_cast<Index>(model.latent_models.size()));
    for (std::size_t i = 0; i < model.latent_models.size(); ++i)
        z(static_cast<Index>(i)) = predict_hk(model.latent_models[i], p).mean;
    return z;
}

Eigen::VectorXd predict_latent(const SfRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    Eigen::VectorXd z(static_cast<Index>(model.latent_models.size()));
    for (std::size_t i = 0; i < model.latent_models.size(); ++i)
        z(static_cast<Index>(i)) = predict_kriging(model.latent_models[i], p).mean;
    return z;
}

Eigen::VectorXd predict_marom(const MaRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    return reconstruct(model.hi_basis, predict_latent(model, p));
}

Eigen::VectorXd predict_sfrom(const SfRomModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    return reconstruct(model.basis, predict_latent(model, p));
}

namespace {

template <class Model, class Predict>
Eigen::MatrixXd predict_columns(const Model& model, const Eigen::MatrixXd& designs, Index d, Predict predict) {
    Eigen::MatrixXd out(d, designs.cols());
    for (Index j = 0; j < designs.cols(); ++j) out.col(j) = predict(model, designs.col(j));
    return out;
}

}  // namespace

Eigen::MatrixXd predict_fields(const MaRomModel& model, const Eigen::MatrixXd& designs) {
    return predict_columns(model, designs, model.hi_basis.dim(),
                           [](const MaRomModel& m, const Eigen::VectorXd& p) { return predict_marom(m, p); });
}

Eigen::MatrixXd predict_fields(const SfRomModel& model, const Eigen::MatrixXd& designs) {
    return predict_columns(model, designs, model.basis.dim(),
                           [](const SfRomModel& m, const Eigen::VectorXd& p) { return predict_sfrom(m, p); });
}

Eigen::MatrixXd predict_fields(const RomModel& model, const Eigen::MatrixXd& designs) {
    return std::visit([&](const auto& m) { return predict_fields(m, designs); }, model);
}

const PodBasis& output_basis(const RomModel& model) {
    if (const auto* ma = std::get_if<MaRomModel>(&model)) return ma->hi_basis;
    return std::get<SfRomModel>(model).basis;
}

Index design_dim(const RomModel& model) {
    if (const auto* ma = std::get_if<MaRomModel>(&model))
        return ma->latent_models.empty() ? 0 : ma->latent_models.front().input_normalizer().dim();
    const auto& sf = std::get<SfRomModel>(model);
    return sf.latent_models.empty() ? 0 : sf.latent_models.front().input_normalizer().dim();
}

}  // namespace marom
