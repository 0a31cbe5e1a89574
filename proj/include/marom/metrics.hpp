#pragma once

#include <Eigen/Dense>

#include "json.hpp"

#include <vector>

namespace marom {

struct ErrorReport {
    double e_abs = 0.0;   // in field units
    double e_norm = 0.0;  // dimensionless
    Eigen::Index n_test = 0;
    std::vector<double> per_sample_norms;  // ||truth_j - prediction_j||_2
};

/// Root-mean-square over test columns of the per-sample L2 error norm.
double field_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths);

/// field_error divided by the RMS distance of the truths from mean_field.
/// mean_field is a caller choice; the pipeline passes the training mean.
double normalized_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths,
                        const Eigen::VectorXd& mean_field);

ErrorReport error_report(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths,
                         const Eigen::VectorXd& mean_field);

/// n_hi * cost_hi + m_lo * cost_lo, in CPU-seconds.
double training_cost(long long n_hi, long long m_lo, double cost_hi, double cost_lo);

nlohmann::json to_json(const ErrorReport& report);

}  // namespace marom
