#pragma once

#include <Eigen/Dense>

#include "json.hpp"

namespace marom {

/// Affine map z = scale * rotation * (w - translation) taking low-fidelity
/// latent coordinates into the high-fidelity latent space.
///
/// `rotation` is orthogonal but may be a reflection; `det` records which.
struct ProcrustesTransform {
    double scale = 1.0;
    Eigen::VectorXd translation;
    Eigen::MatrixXd rotation;
    double residual = 0.0;  // || z - scale * rotation * (w - translation) ||_F on the fitting pairs
    double det = 1.0;

    Eigen::Index dim() const { return translation.size(); }
};

/// Closed-form Procrustes fit from n linked pairs (columns). z_hi must be
/// column-centred (it comes from a centred POD); this is checked, not redone.
ProcrustesTransform fit_procrustes(const Eigen::MatrixXd& z_hi, const Eigen::MatrixXd& w_linked);

Eigen::MatrixXd apply_transform(const ProcrustesTransform& transform, const Eigen::MatrixXd& w_all);

/// || z - s Q (w - t) ||_F for arbitrary (s, t, Q).
double procrustes_objective(const Eigen::MatrixXd& z, const Eigen::MatrixXd& w, double scale,
                            const Eigen::VectorXd& translation, const Eigen::MatrixXd& rotation);

nlohmann::json to_json(const ProcrustesTransform& t);
ProcrustesTransform transform_from_json(const nlohmann::json& j);

}  // namespace marom
