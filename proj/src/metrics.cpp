#include "marom/metrics.hpp"

#include "marom/error.hpp"

#include <cmath>
#include <string>

namespace marom {
namespace {

void check_shapes(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths) {
    if (predictions.rows() != truths.rows() || predictions.cols() != truths.cols())
        throw DataError("shape mismatch: predictions are " + std::to_string(predictions.rows()) + "x" +
                        std::to_string(predictions.cols()) + ", truths are " + std::to_string(truths.rows()) + "x" +
                        std::to_string(truths.cols()));
    if (truths.cols() < 1) throw DataError("error metrics need at least one test sample");
}

// Shared by numerator and denominator so that identical arguments give
// bit-identical sums.
double squared_distance_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).colwise().squaredNorm().sum();
}

}  // namespace

double field_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths) {
    check_shapes(predictions, truths);
    return std::sqrt(squared_distance_sum(truths, predictions) / static_cast<double>(truths.cols()));
}

double normalized_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths,
                        const Eigen::VectorXd& mean_field) {
    check_shapes(predictions, truths);
    if (mean_field.size() != truths.rows())
        throw DataError("mean field has " + std::to_string(mean_field.size()) + " entries, fields have " +
                        std::to_string(truths.rows()));
    const double num = squared_distance_sum(truths, predictions);
    const double den = squared_distance_sum(truths, mean_field.replicate(1, truths.cols()));
    if (!(den > 0.0)) throw DataError("degenerate test set: every truth equals the mean field");
    // The 1/n_t factors cancel.
    return std::sqrt(num / den);
}

ErrorReport error_report(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& truths,
                         const Eigen::VectorXd& mean_field) {
    ErrorReport r;
    r.e_abs = field_error(predictions, truths);
    r.e_norm = normalized_error(predictions, truths, mean_field);
    r.n_test = truths.cols();
    r.per_sample_norms.reserve(static_cast<std::size_t>(truths.cols()));
    for (Eigen::Index j = 0; j < truths.cols(); ++j) r.per_sample_norms.push_back((truths.col(j) - predictions.col(j)).norm());
    return r;
}

double training_cost(long long n_hi, long long m_lo, double cost_hi, double cost_lo) {
    return static_cast<double>(n_hi) * cost_hi + static_cast<double>(m_lo) * cost_lo;
}

nlohmann::json to_json(const ErrorReport& report) {
    return {{"e_abs", report.e_abs},
            {"e_norm", report.e_norm},
            {"n_test", report.n_test},
            {"per_sample_norms", report.per_sample_norms}};
}

}  // namespace marom
