#include "marom/pod.hpp"

#include "marom/csv.hpp"
#include "marom/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marom {

PodBasis::PodBasis(Eigen::MatrixXd modes, Eigen::VectorXd eigenvalues, Eigen::VectorXd mean)
    : modes_(std::move(modes)), eigenvalues_(std::move(eigenvalues)), mean_(std::move(mean)) {
    if (modes_.rows() != mean_.size())
        throw DataError("basis modes have " + std::to_string(modes_.rows()) + " rows but mean has " +
                        std::to_string(mean_.size()) + " entries");
    if (modes_.cols() > eigenvalues_.size())
        throw DataError("basis keeps " + std::to_string(modes_.cols()) + " modes but spectrum has only " +
                        std::to_string(eigenvalues_.size()) + " entries");
    achieved_ric_ = ric_at({eigenvalues_.data(), static_cast<std::size_t>(eigenvalues_.size())}, modes_.cols());
}

double ric_at(std::span<const double> eigenvalues, Index k) {
    const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
    if (total <= 0.0) return 0.0;
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(std::max<Index>(k, 0)), eigenvalues.size());
    const double kept = std::accumulate(eigenvalues.begin(), eigenvalues.begin() + static_cast<std::ptrdiff_t>(kk), 0.0);
    return kept / total;
}

Index select_rank(std::span<const double> eigenvalues, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("RIC threshold must lie in (0, 1]");
    const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
    if (total <= 0.0) throw NumericalError("zero total variance: every snapshot is identical");
    double kept = 0.0;
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
        kept += eigenvalues[k];
        if (kept / total >= threshold - 1e-12) return static_cast<Index>(k + 1);
    }
    return static_cast<Index>(eigenvalues.size());
}

PodBasis fit_pod(const Eigen::MatrixXd& snapshots, const Truncation& truncation) {
    const Index n = snapshots.cols();
    if (n < 2) throw DataError("POD needs at least 2 snapshots, got " + std::to_string(n));
    const CenteredSnapshots c = center(snapshots);

    // Thin SVD of the centered data instead of the d x d covariance: the left
    // singular vectors are its eigenvectors and lambda = sigma^2 / n.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(c.values, Eigen::ComputeThinU);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > kRankCutoff * sigma_max && sigma(rank) > 0.0) ++rank;

    Eigen::VectorXd eigenvalues(rank);
    for (Index j = 0; j < rank; ++j) eigenvalues(j) = std::max(0.0, sigma(j) * sigma(j) / static_cast<double>(n));

    Index k = 0;
    if (const auto* ric = std::get_if<RicThreshold>(&truncation)) {
        if (rank == 0) throw NumericalError("zero total variance: every snapshot is identical");
        k = select_rank({eigenvalues.data(), static_cast<std::size_t>(rank)}, ric->value);
    } else {
        k = std::get<FixedRank>(truncation).k;
        if (k < 1) throw UsageError("fixed POD rank must be at least 1");
        if (k > rank)
            throw NumericalError("requested " + std::to_string(k) + " POD modes but the data has numerical rank " +
                                 std::to_string(rank));
    }

    Eigen::MatrixXd modes = svd.matrixU().leftCols(k);
    for (Index j = 0; j < k; ++j) {
        Index imax = 0;
        modes.col(j).cwiseAbs().maxCoeff(&imax);
        if (modes(imax, j) < 0.0) modes.col(j) *= -1.0;
    }
    return PodBasis(std::move(modes), std::move(eigenvalues), c.mean);
}

Eigen::MatrixXd project(const PodBasis& basis, const Eigen::MatrixXd& snapshots) {
    if (snapshots.rows() != basis.dim())
        throw DataError("cannot project " + std::to_string(snapshots.rows()) + "-dof snapshots onto a basis of dimension " +
                        std::to_string(basis.dim()));
    return basis.modes().transpose() * (snapshots.colwise() - basis.mean());
}

Eigen::MatrixXd reconstruct(const PodBasis& basis, const Eigen::MatrixXd& latent) {
    if (latent.rows() != basis.k())
        throw DataError("latent matrix has " + std::to_string(latent.rows()) + " rows but basis keeps " +
                        std::to_string(basis.k()) + " modes");
    Eigen::MatrixXd out = basis.modes() * latent;
    out.colwise() += basis.mean();
    return out;
}

nlohmann::json basis_header(const PodBasis& basis) {
    nlohmann::json j;
    j["k"] = basis.k();
    j["d"] = basis.dim();
    j["achieved_ric"] = basis.achieved_ric();
    j["eigenvalues"] = std::vector<double>(basis.eigenvalues().data(), basis.eigenvalues().data() + basis.rank());
    return j;
}

void save_basis(const PodBasis& basis, const std::filesystem::path& dir, const std::string& prefix) {
    auto header = basis_header(basis);
    header["modes"] = prefix + "_modes.csv";
    header["mean"] = prefix + "_mean.csv";
    csv::write_text(dir / (prefix + ".json"), header.dump(2) + "\n");
    csv::write_matrix(dir / (prefix + "_modes.csv"), basis.modes());
    csv::write_matrix(dir / (prefix + "_mean.csv"), basis.mean());
}

PodBasis load_basis(const std::filesystem::path& dir, const std::string& prefix) {
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(csv::read_text(dir / (prefix + ".json")));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("basis header " + (dir / (prefix + ".json")).string() + ": " + e.what());
    }
    const auto eig = header.at("eigenvalues").get<std::vector<double>>();
    Eigen::MatrixXd modes = csv::read_matrix(dir / header.at("modes").get<std::string>());
    Eigen::MatrixXd mean = csv::read_matrix(dir / header.at("mean").get<std::string>());
    if (mean.cols() != 1) throw DataError("basis mean must be a single column");
    if (modes.rows() != header.at("d").get<Index>() || modes.cols() != header.at("k").get<Index>())
        throw DataError("basis modes shape does not match its header");
    return PodBasis(std::move(modes), Eigen::Map<const Eigen::VectorXd>(eig.data(), static_cast<Index>(eig.size())),
                    mean.col(0));
}

}  // namespace marom
