#pragma once

#include "marom/fields.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <variant>

namespace marom {

/// Keep the fewest modes whose relative information content reaches the threshold.
struct RicThreshold {
    double value = 0.999999;
};

/// Keep exactly this many modes.
struct FixedRank {
    Index k = 1;
};

using Truncation = std::variant<RicThreshold, FixedRank>;

/// Singular values below this fraction of the largest one are numerical noise.
inline constexpr double kRankCutoff = 1e-12;

/// Truncated proper-orthogonal-decomposition basis of a snapshot ensemble.
///
/// `eigenvalues` is the full nonzero spectrum of the sample covariance
/// (length = numerical rank), not just the kept part, so that the achieved RIC
/// and discarded energy stay recoverable.
class PodBasis {
public:
    PodBasis() = default;
    PodBasis(Eigen::MatrixXd modes, Eigen::VectorXd eigenvalues, Eigen::VectorXd mean);

    const Eigen::MatrixXd& modes() const { return modes_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    double achieved_ric() const { return achieved_ric_; }

    Index k() const { return modes_.cols(); }
    Index dim() const { return modes_.rows(); }
    Index rank() const { return eigenvalues_.size(); }

private:
    Eigen::MatrixXd modes_;
    Eigen::VectorXd eigenvalues_;
    Eigen::VectorXd mean_;
    double achieved_ric_ = 0.0;
};

/// Cumulative energy fraction of the first k eigenvalues.
double ric_at(std::span<const double> eigenvalues, Index k);

/// Smallest k with ric_at(k) >= threshold. Comparisons allow a 1e-12 slack so
/// that a threshold hit exactly in real arithmetic resolves to the smaller k.
Index select_rank(std::span<const double> eigenvalues, double threshold);

PodBasis fit_pod(const Eigen::MatrixXd& snapshots, const Truncation& truncation);
inline PodBasis fit_pod(const SnapshotMatrix& snapshots, const Truncation& truncation) {
    return fit_pod(snapshots.values(), truncation);
}

/// Latent coordinates modes^T (x - mean); centering happens here.
Eigen::MatrixXd project(const PodBasis& basis, const Eigen::MatrixXd& snapshots);
/// mean + modes * latent.
Eigen::MatrixXd reconstruct(const PodBasis& basis, const Eigen::MatrixXd& latent);

nlohmann::json basis_header(const PodBasis& basis);
/// <prefix>.json header plus <prefix>_modes.csv and <prefix>_mean.csv in dir.
void save_basis(const PodBasis& basis, const std::filesystem::path& dir, const std::string& prefix);
PodBasis load_basis(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace marom
