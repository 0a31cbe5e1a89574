#include "marom/align.hpp"

#include "marom/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace marom {

ProcrustesTransform fit_procrustes(const Eigen::MatrixXd& z_hi, const Eigen::MatrixXd& w_linked) {
    if (z_hi.rows() != w_linked.rows() || z_hi.cols() != w_linked.cols())
        throw DataError("Procrustes inputs differ in shape: " + std::to_string(z_hi.rows()) + "x" +
                        std::to_string(z_hi.cols()) + " vs " + std::to_string(w_linked.rows()) + "x" +
                        std::to_string(w_linked.cols()));
    const Eigen::Index n = z_hi.cols();
    if (n < 2) throw DataError("Procrustes alignment needs at least 2 linked pairs, got " + std::to_string(n));
    if (z_hi.rows() < 1) throw DataError("Procrustes alignment needs a latent dimension of at least 1");

    const double z_scale = std::max(1.0, z_hi.cwiseAbs().maxCoeff());
    if (z_hi.rowwise().mean().cwiseAbs().maxCoeff() > 1e-8 * z_scale)
        throw DataError("high-fidelity latent coordinates are not centred");

    ProcrustesTransform out;
    out.translation = w_linked.rowwise().mean();
    const Eigen::MatrixXd shifted = w_linked.colwise() - out.translation;
    const double spread = shifted.squaredNorm();
    if (!(spread > 0.0) || std::sqrt(spread) <= 1e-14 * std::max(1.0, w_linked.cwiseAbs().maxCoeff()))
        throw NumericalError("linked low-fidelity latent coordinates are all identical; scaling is undefined");

    // U S V^T = W' Z^T; Q = V U^T, s = tr(S) / tr(W' W'^T).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted * z_hi.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.rotation = svd.matrixV() * svd.matrixU().transpose();
    out.scale = svd.singularValues().sum() / spread;
    if (!(out.scale > 0.0))
        throw NumericalError("linked data are uncorrelated with the high-fidelity latent coordinates (scale = 0)");
    out.det = out.rotation.determinant();
    out.residual = procrustes_objective(z_hi, w_linked, out.scale, out.translation, out.rotation);
    return out;
}

Eigen::MatrixXd apply_transform(const ProcrustesTransform& t, const Eigen::MatrixXd& w_all) {
    if (w_all.rows() != t.dim())
        throw DataError("transform expects " + std::to_string(t.dim()) + "-dimensional latent columns, got " +
                        std::to_string(w_all.rows()));
    return t.scale * (t.rotation * (w_all.colwise() - t.translation));
}

double procrustes_objective(const Eigen::MatrixXd& z, const Eigen::MatrixXd& w, double scale,
                            const Eigen::VectorXd& translation, const Eigen::MatrixXd& rotation) {
    return (z - scale * (rotation * (w.colwise() - translation))).norm();
}

nlohmann::json to_json(const ProcrustesTransform& t) {
    nlohmann::json q = nlohmann::json::array();
    for (Eigen::Index i = 0; i < t.rotation.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(t.rotation.cols()));
        for (Eigen::Index j = 0; j < t.rotation.cols(); ++j) row[static_cast<std::size_t>(j)] = t.rotation(i, j);
        q.push_back(row);
    }
    return {{"s", t.scale},
            {"t", std::vector<double>(t.translation.data(), t.translation.data() + t.translation.size())},
            {"Q", q},
            {"residual", t.residual},
            {"detQ", t.det}};
}

ProcrustesTransform transform_from_json(const nlohmann::json& j) {
    ProcrustesTransform t;
    try {
        t.scale = j.at("s").get<double>();
        const auto tv = j.at("t").get<std::vector<double>>();
        t.translation = Eigen::Map<const Eigen::VectorXd>(tv.data(), static_cast<Eigen::Index>(tv.size()));
        const auto q = j.at("Q").get<std::vector<std::vector<double>>>();
        t.rotation.resize(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(q.size()));
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i].size() != q.size()) throw DataError("transform Q must be square");
            for (std::size_t c = 0; c < q.size(); ++c)
                t.rotation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = q[i][c];
        }
        t.residual = j.at("residual").get<double>();
        t.det = j.at("detQ").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed transform: ") + e.what());
    }
    if (t.rotation.rows() != t.translation.size()) throw DataError("transform Q and t sizes differ");
    return t;
}

}  // namespace marom
