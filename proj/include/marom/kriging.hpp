#pragma once

#include "marom/fields.hpp"

#include "json.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace marom {

/// Matern 3/2 hyperparameters. theta are inverse length scales in unit-cube
/// input coordinates, one per design parameter.
struct KernelParams {
    Eigen::VectorXd theta;
    double sigma2 = 1.0;
    double nugget = 1e-10;
};

/// Maximum-likelihood settings. Hyperparameters are searched over log(theta)
/// by compass search restarted from an LHS of `starts` points.
struct KrigingSettings {
    int starts = 8;
    int max_iters = 200;  // polls per start
    double theta_min = 1e-3;
    double theta_max = 1e3;
    double nugget = 1e-10;
    double nugget_max = 1e-6;  // nugget grows x10 on factorisation failure up to this
    double step_tol = 1e-3;    // stop once the log(theta) step falls below this
    std::uint64_t seed = 0;
};

/// Lower bound on the profiled process variance, relative to the squared
/// output scale. A response with no variation ends up here.
inline constexpr double kSigma2Floor = 1e-14;

/// sigma2 * prod_i (1 + sqrt3 theta_i |d_i|) exp(-sqrt3 theta_i |d_i|).
double matern32(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const KernelParams& params);
double matern32_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                            const Eigen::VectorXd& theta);

/// Correlation matrix of the columns of unit_inputs, without nugget.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& unit_inputs, const Eigen::VectorXd& theta);
Eigen::VectorXd correlation_vector(const Eigen::MatrixXd& unit_inputs, const Eigen::Ref<const Eigen::VectorXd>& u,
                                   const Eigen::VectorXd& theta);

/// Per-parameter affine map from design bounds onto [0, 1].
class InputNormalizer {
public:
    InputNormalizer() = default;
    explicit InputNormalizer(const std::vector<Bounds>& bounds);

    Eigen::VectorXd to_unit(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
    Eigen::MatrixXd to_unit_columns(const Eigen::MatrixXd& raw) const;
    bool inside(const Eigen::Ref<const Eigen::VectorXd>& raw) const;

    const std::vector<Bounds>& bounds() const { return bounds_; }
    Index dim() const { return static_cast<Index>(bounds_.size()); }
    bool operator==(const InputNormalizer& o) const { return bounds_ == o.bounds_; }

private:
    std::vector<Bounds> bounds_;
};

class HierarchicalKrigingModel;

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
    bool extrapolated = false;  // p lies outside the training bounds
};

/// Diagnostics of a maximum-likelihood search.
struct FitReport {
    std::vector<double> start_loglik;  // at each multistart seed point
    double best_loglik = 0.0;
    int evaluations = 0;
};

/// Profiled (concentrated) log-likelihood for a single-term trend `trend`
/// (all ones for ordinary Kriging). Returns -inf when R cannot be factorised
/// even at the largest nugget. `nugget_used` receives the nugget that worked.
double concentrated_log_likelihood(const Eigen::MatrixXd& unit_inputs, const Eigen::VectorXd& outputs,
                                   const Eigen::VectorXd& trend, const Eigen::VectorXd& theta,
                                   const KrigingSettings& settings, double* nugget_used = nullptr);

namespace detail {

/// Factorised GP state with one trend basis function: everything prediction
/// needs, in raw output units.
struct GpState {
    Eigen::MatrixXd unit_inputs;  // b x n
    Eigen::VectorXd outputs;      // n
    Eigen::VectorXd trend;        // n, trend basis at the training sites
    KernelParams params;
    Eigen::LLT<Eigen::MatrixXd> factor;  // of R + nugget I
    double coefficient = 0.0;            // GLS trend coefficient (mu or beta)
    Eigen::VectorXd weights;             // R^-1 (outputs - coefficient * trend)
    Eigen::VectorXd whitened_trend;      // L^-1 trend
    FitReport report;

    /// Mean and variance given the trend basis value at the query point.
    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& u, double trend_at_u) const;
};

}  // namespace detail

/// Ordinary Kriging model of one scalar response.
class KrigingModel {
public:
    const Eigen::MatrixXd& train_inputs() const { return state_.unit_inputs; }  // unit-cube coordinates
    const Eigen::VectorXd& train_outputs() const { return state_.outputs; }
    const KernelParams& params() const { return state_.params; }
    double mu() const { return state_.coefficient; }
    const Eigen::VectorXd& weights() const { return state_.weights; }
    const Eigen::LLT<Eigen::MatrixXd>& correlation_factor() const { return state_.factor; }
    const InputNormalizer& input_normalizer() const { return normalizer_; }
    const FitReport& report() const { return state_.report; }
    const detail::GpState& state() const { return state_; }

    friend KrigingModel fit_kriging(const DesignMatrix&, const Eigen::VectorXd&, const KrigingSettings&);
    friend Prediction predict_kriging(const KrigingModel&, const Eigen::Ref<const Eigen::VectorXd>&);
    friend KrigingModel kriging_from_json(const nlohmann::json&);
    friend class HierarchicalKrigingModel;
    friend HierarchicalKrigingModel hk_from_json(const nlohmann::json&);

private:
    detail::GpState state_;
    InputNormalizer normalizer_;
};

KrigingModel fit_kriging(const DesignMatrix& inputs, const Eigen::VectorXd& outputs, const KrigingSettings& settings);
Prediction predict_kriging(const KrigingModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);

/// Hierarchical Kriging: beta * lo(p) + w^T r(p), where lo is a Kriging model
/// of the low-fidelity response and r the Matern 3/2 correlation to the
/// high-fidelity sites.
class HierarchicalKrigingModel {
public:
    const KrigingModel& lo_model() const { return lo_; }
    double beta() const { return state_.coefficient; }
    const Eigen::VectorXd& weights() const { return state_.weights; }
    const KernelParams& params() const { return state_.params; }
    const Eigen::MatrixXd& train_inputs() const { return state_.unit_inputs; }
    const Eigen::VectorXd& train_outputs() const { return state_.outputs; }
    /// Low-fidelity predictions at the high-fidelity sites.
    const Eigen::VectorXd& trend() const { return state_.trend; }
    const InputNormalizer& input_normalizer() const { return lo_.input_normalizer(); }
    const FitReport& report() const { return state_.report; }
    const detail::GpState& state() const { return state_; }

    friend HierarchicalKrigingModel fit_hk(const KrigingModel&, const DesignMatrix&, const Eigen::VectorXd&,
                                           const KrigingSettings&);
    friend Prediction predict_hk(const HierarchicalKrigingModel&, const Eigen::Ref<const Eigen::VectorXd>&);
    friend HierarchicalKrigingModel hk_from_json(const nlohmann::json&);

private:
    KrigingModel lo_;
    detail::GpState state_;
};

HierarchicalKrigingModel fit_hk(const KrigingModel& lo_model, const DesignMatrix& hi_inputs,
                                const Eigen::VectorXd& hi_outputs, const KrigingSettings& settings);
Prediction predict_hk(const HierarchicalKrigingModel& model, const Eigen::Ref<const Eigen::VectorXd>& p);

nlohmann::json to_json(const KrigingModel& model);
nlohmann::json to_json(const HierarchicalKrigingModel& model);
KrigingModel kriging_from_json(const nlohmann::json& j);
HierarchicalKrigingModel hk_from_json(const nlohmann::json& j);

}  // namespace marom
