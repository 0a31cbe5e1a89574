#include "marom/kriging.hpp"

#include "marom/error.hpp"
#include "marom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace marom {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Factorises R + nugget I, escalating the nugget x10 on failure.
bool factorize(const Eigen::MatrixXd& unit_inputs, const Eigen::VectorXd& theta, const KrigingSettings& settings,
               Eigen::LLT<Eigen::MatrixXd>& llt, double& nugget) {
    Eigen::MatrixXd r = correlation_matrix(unit_inputs, theta);
    const Index n = r.rows();
    double nug = settings.nugget;
    while (true) {
        Eigen::MatrixXd a = r;
        for (Index i = 0; i < n; ++i) a(i, i) += nug;
        llt.compute(a);
        if (llt.info() == Eigen::Success) {
            bool positive = true;
            for (Index i = 0; i < n && positive; ++i) positive = llt.matrixLLT()(i, i) > 0.0;
            if (positive) {
                nugget = nug;
                return true;
            }
        }
        nug *= 10.0;
        if (nug > settings.nugget_max * (1.0 + 1e-9)) return false;
    }
}

struct Profile {
    double loglik = kNegInf;
    double coefficient = 0.0;
    double sigma2 = 0.0;
};

// Profiles the trend coefficient and process variance out of the likelihood
// for an already factorised R.
Profile profile(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                double sigma2_floor) {
    const Index n = y.size();
    const Eigen::VectorXd a = llt.matrixL().solve(y);
    const Eigen::VectorXd c = llt.matrixL().solve(f);
    const double gram = c.squaredNorm();
    Profile p;
    if (!(gram > 0.0) || !std::isfinite(gram)) return p;
    p.coefficient = c.dot(a) / gram;
    const Eigen::VectorXd e = a - p.coefficient * c;
    p.sigma2 = std::max(e.squaredNorm() / static_cast<double>(n), sigma2_floor);
    double logdet = 0.0;
    for (Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
    logdet *= 2.0;
    p.loglik = -0.5 * static_cast<double>(n) * std::log(p.sigma2) - 0.5 * logdet;
    if (!std::isfinite(p.loglik)) p.loglik = kNegInf;
    return p;
}

double output_scale(const Eigen::VectorXd& y) {
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    if (sd > 0.0 && std::isfinite(sd)) return sd;
    const double amax = y.cwiseAbs().maxCoeff();
    return amax > 0.0 ? amax : 1.0;
}

Eigen::VectorXd clamp_log_theta(Eigen::VectorXd x, double lo, double hi) {
    for (Index i = 0; i < x.size(); ++i) x(i) = std::clamp(x(i), lo, hi);
    return x;
}

// Maximum-likelihood theta for standardised data y (trend basis f).
Eigen::VectorXd maximize_likelihood(const Eigen::MatrixXd& u, const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                                    const KrigingSettings& settings, FitReport& report) {
    const Index b = u.rows();
    const double lo = std::log(settings.theta_min);
    const double hi = std::log(settings.theta_max);
    auto objective = [&](const Eigen::VectorXd& log_theta) {
        ++report.evaluations;
        return concentrated_log_likelihood(u, y, f, log_theta.array().exp().matrix(), settings);
    };

    const int starts = std::max(1, settings.starts);
    const auto bins = lhs_bins(starts, b, settings.seed, 100);
    const double width = (hi - lo) / static_cast<double>(starts);

    Eigen::VectorXd best_x = Eigen::VectorXd::Constant(b, 0.5 * (lo + hi));
    double best_f = kNegInf;
    report.start_loglik.clear();

    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd x(b);
        for (Index d = 0; d < b; ++d)
            x(d) = lo + (static_cast<double>(bins[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)]) + 0.5) * width;
        double fx = objective(x);
        report.start_loglik.push_back(fx);

        double step = width;
        for (int it = 0; it < settings.max_iters && step >= settings.step_tol; ++it) {
            bool moved = false;
            for (Index d = 0; d < b && !moved; ++d) {
                for (double sign : {1.0, -1.0}) {
                    Eigen::VectorXd trial = x;
                    trial(d) += sign * step;
                    trial = clamp_log_theta(std::move(trial), lo, hi);
                    if (trial(d) == x(d)) continue;
                    const double ft = objective(trial);
                    if (ft > fx) {
                        x = std::move(trial);
                        fx = ft;
                        moved = true;
                        break;
                    }
                }
            }
            if (!moved) step *= 0.5;
        }
        if (fx > best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    report.best_loglik = best_f;
    if (!std::isfinite(best_f)) {
        std::string where;
        for (Index d = 0; d < b; ++d) where += (d ? ", " : "") + std::to_string(std::exp(best_x(d)));
        throw NumericalError("Kriging likelihood could not be evaluated at any multistart point (best theta: [" +
                             where + "]); correlation matrix not factorisable up to nugget " +
                             std::to_string(settings.nugget_max));
    }
    return best_x.array().exp().matrix();
}

// Fits the GP state for raw outputs y and raw trend basis f; the likelihood
// search runs on (y - shift) / scale and f / f_scale.
detail::GpState fit_state(Eigen::MatrixXd unit_inputs, const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                          double shift, double scale, double f_scale, const KrigingSettings& settings) {
    detail::GpState st;
    const Eigen::VectorXd ys = (y.array() - shift) / scale;
    const Eigen::VectorXd fs = f / f_scale;
    const Eigen::VectorXd theta = maximize_likelihood(unit_inputs, ys, fs, settings, st.report);

    st.unit_inputs = std::move(unit_inputs);
    st.outputs = y;
    st.trend = f;
    st.params.theta = theta;
    double nugget = settings.nugget;
    if (!factorize(st.unit_inputs, theta, settings, st.factor, nugget))
        throw NumericalError("correlation matrix not factorisable at the fitted theta");
    st.params.nugget = nugget;

    const Profile raw = profile(st.factor, st.outputs, st.trend, kSigma2Floor * scale * scale);
    if (!std::isfinite(raw.loglik)) throw NumericalError("degenerate Kriging trend at the fitted theta");
    st.coefficient = raw.coefficient;
    st.params.sigma2 = raw.sigma2;
    st.weights = st.factor.solve(st.outputs - st.coefficient * st.trend);
    st.whitened_trend = st.factor.matrixL().solve(st.trend);
    return st;
}

// Rebuilds the derived parts of a state from inputs, outputs, trend and params.
void refactor_state(detail::GpState& st) {
    KrigingSettings s;
    s.nugget = st.params.nugget;
    s.nugget_max = st.params.nugget;
    double nugget = s.nugget;
    if (!factorize(st.unit_inputs, st.params.theta, s, st.factor, nugget))
        throw NumericalError("stored Kriging model has a non-factorisable correlation matrix");
    const Profile raw = profile(st.factor, st.outputs, st.trend, 0.0);
    st.coefficient = raw.coefficient;
    st.weights = st.factor.solve(st.outputs - st.coefficient * st.trend);
    st.whitened_trend = st.factor.matrixL().solve(st.trend);
}

void check_training_set(const DesignMatrix& inputs, const Eigen::VectorXd& outputs, const char* what) {
    if (inputs.samples() < 2)
        throw DataError(std::string(what) + " needs at least 2 samples, got " + std::to_string(inputs.samples()));
    if (outputs.size() != inputs.samples())
        throw DataError(std::string(what) + ": " + std::to_string(inputs.samples()) + " inputs but " +
                        std::to_string(outputs.size()) + " outputs");
    if (!outputs.allFinite()) throw DataError(std::string(what) + ": outputs contain non-finite values");
    const auto dups = inputs.duplicate_pairs();
    if (!dups.empty())
        throw DataError(std::string(what) + ": duplicate input sites (columns " + std::to_string(dups.front().first) +
                        " and " + std::to_string(dups.front().second) + ")");
}

void check_query(const InputNormalizer& norm, const Eigen::Ref<const Eigen::VectorXd>& p) {
    if (p.size() != norm.dim())
        throw DataError("prediction point has " + std::to_string(p.size()) + " parameters, model expects " +
                        std::to_string(norm.dim()));
    if (!p.allFinite()) throw DataError("prediction point has non-finite entries");
}

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

nlohmann::json state_json(const detail::GpState& st) {
    nlohmann::json inputs = nlohmann::json::array();
    for (Index j = 0; j < st.unit_inputs.cols(); ++j) inputs.push_back(vec_json(st.unit_inputs.col(j)));
    return {{"theta", vec_json(st.params.theta)},
            {"sigma2", st.params.sigma2},
            {"nugget", st.params.nugget},
            {"train_inputs_unit", inputs},
            {"train_outputs", vec_json(st.outputs)},
            {"weights", vec_json(st.weights)},
            {"best_loglik", st.report.best_loglik}};
}

detail::GpState state_from_json(const nlohmann::json& j, Eigen::VectorXd trend) {
    detail::GpState st;
    st.params.theta = json_vec(j.at("theta"));
    st.params.sigma2 = j.at("sigma2").get<double>();
    st.params.nugget = j.at("nugget").get<double>();
    const auto cols = j.at("train_inputs_unit").get<std::vector<std::vector<double>>>();
    st.unit_inputs.resize(st.params.theta.size(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (static_cast<Index>(cols[c].size()) != st.params.theta.size())
            throw DataError("stored Kriging input has the wrong dimension");
        for (std::size_t d = 0; d < cols[c].size(); ++d)
            st.unit_inputs(static_cast<Index>(d), static_cast<Index>(c)) = cols[c][d];
    }
    st.outputs = json_vec(j.at("train_outputs"));
    if (st.outputs.size() != st.unit_inputs.cols()) throw DataError("stored Kriging outputs/inputs mismatch");
    st.trend = std::move(trend);
    st.report.best_loglik = j.value("best_loglik", 0.0);
    refactor_state(st);
    return st;
}

nlohmann::json normalizer_json(const InputNormalizer& n) {
    std::vector<double> lower, upper;
    for (const auto& b : n.bounds()) {
        lower.push_back(b.lower);
        upper.push_back(b.upper);
    }
    return {{"lower", lower}, {"upper", upper}};
}

InputNormalizer normalizer_from_json(const nlohmann::json& j) {
    const auto lower = j.at("lower").get<std::vector<double>>();
    const auto upper = j.at("upper").get<std::vector<double>>();
    if (lower.size() != upper.size()) throw DataError("normalizer bounds differ in length");
    std::vector<Bounds> b;
    for (std::size_t i = 0; i < lower.size(); ++i) b.push_back({lower[i], upper[i]});
    return InputNormalizer(b);
}

}  // namespace

double matern32_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                            const Eigen::VectorXd& theta) {
    double poly = 1.0;
    double expo = 0.0;
    for (Index i = 0; i < theta.size(); ++i) {
        const double t = kSqrt3 * theta(i) * std::abs(a(i) - b(i));
        poly *= 1.0 + t;
        expo += t;
    }
    return poly * std::exp(-expo);
}

double matern32(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const KernelParams& params) {
    return params.sigma2 * matern32_correlation(a, b, params.theta);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& u, const Eigen::VectorXd& theta) {
    const Index n = u.cols();
    const Index b = u.rows();
    Eigen::VectorXd scaled = kSqrt3 * theta;
    Eigen::MatrixXd r(n, n);
    for (Index j = 0; j < n; ++j) {
        r(j, j) = 1.0;
        for (Index i = j + 1; i < n; ++i) {
            double poly = 1.0;
            double expo = 0.0;
            for (Index d = 0; d < b; ++d) {
                const double t = scaled(d) * std::abs(u(d, i) - u(d, j));
                poly *= 1.0 + t;
                expo += t;
            }
            const double v = poly * std::exp(-expo);
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

Eigen::VectorXd correlation_vector(const Eigen::MatrixXd& u, const Eigen::Ref<const Eigen::VectorXd>& p,
                                   const Eigen::VectorXd& theta) {
    Eigen::VectorXd r(u.cols());
    for (Index j = 0; j < u.cols(); ++j) r(j) = matern32_correlation(u.col(j), p, theta);
    return r;
}

InputNormalizer::InputNormalizer(const std::vector<Bounds>& bounds) : bounds_(bounds) {
    for (const auto& b : bounds_)
        if (!(b.lower < b.upper)) throw DataError("normalizer needs lower < upper in every dimension");
}

Eigen::VectorXd InputNormalizer::to_unit(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    Eigen::VectorXd u(raw.size());
    for (Index i = 0; i < raw.size(); ++i) {
        const Bounds& b = bounds_[static_cast<std::size_t>(i)];
        u(i) = (raw(i) - b.lower) / b.range();
    }
    return u;
}

Eigen::MatrixXd InputNormalizer::to_unit_columns(const Eigen::MatrixXd& raw) const {
    Eigen::MatrixXd u(raw.rows(), raw.cols());
    for (Index j = 0; j < raw.cols(); ++j) u.col(j) = to_unit(raw.col(j));
    return u;
}

bool InputNormalizer::inside(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
    for (Index i = 0; i < raw.size(); ++i) {
        const Bounds& b = bounds_[static_cast<std::size_t>(i)];
        const double slack = kDesignMatchTolerance * b.range();
        if (raw(i) < b.lower - slack || raw(i) > b.upper + slack) return false;
    }
    return true;
}

double concentrated_log_likelihood(const Eigen::MatrixXd& unit_inputs, const Eigen::VectorXd& outputs,
                                   const Eigen::VectorXd& trend, const Eigen::VectorXd& theta,
                                   const KrigingSettings& settings, double* nugget_used) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double nugget = settings.nugget;
    if (!factorize(unit_inputs, theta, settings, llt, nugget)) return kNegInf;
    if (nugget_used) *nugget_used = nugget;
    return profile(llt, outputs, trend, kSigma2Floor).loglik;
}

Prediction detail::GpState::predict(const Eigen::Ref<const Eigen::VectorXd>& u, double trend_at_u) const {
    const Eigen::VectorXd r = correlation_vector(unit_inputs, u, params.theta);
    Prediction out;
    out.mean = coefficient * trend_at_u + weights.dot(r);
    const Eigen::VectorXd v = factor.matrixL().solve(r);
    const double gram = whitened_trend.squaredNorm();
    const double resid = trend_at_u - whitened_trend.dot(v);
    const double var = params.sigma2 * (1.0 - v.squaredNorm() + (gram > 0.0 ? resid * resid / gram : 0.0));
    out.variance = std::max(0.0, var);
    return out;
}

KrigingModel fit_kriging(const DesignMatrix& inputs, const Eigen::VectorXd& outputs, const KrigingSettings& settings) {
    check_training_set(inputs, outputs, "Kriging fit");
    KrigingModel model;
    model.normalizer_ = InputNormalizer(inputs.bounds());
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(outputs.size());
    model.state_ = fit_state(model.normalizer_.to_unit_columns(inputs.values()), outputs, ones, outputs.mean(),
                             output_scale(outputs), 1.0, settings);
    return model;
}

Prediction predict_kriging(const KrigingModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    check_query(model.normalizer_, p);
    Prediction out = model.state_.predict(model.normalizer_.to_unit(p), 1.0);
    out.extrapolated = !model.normalizer_.inside(p);
    return out;
}

HierarchicalKrigingModel fit_hk(const KrigingModel& lo_model, const DesignMatrix& hi_inputs,
                                const Eigen::VectorXd& hi_outputs, const KrigingSettings& settings) {
    check_training_set(hi_inputs, hi_outputs, "hierarchical Kriging fit");
    if (!(InputNormalizer(hi_inputs.bounds()) == lo_model.input_normalizer()))
        throw DataError("hierarchical Kriging: high-fidelity design bounds differ from the low-fidelity model's");

    Eigen::VectorXd trend(hi_inputs.samples());
    for (Index j = 0; j < hi_inputs.samples(); ++j) trend(j) = predict_kriging(lo_model, hi_inputs.point(j)).mean;
    const double trend_max = trend.cwiseAbs().maxCoeff();
    const double ref = std::max(hi_outputs.cwiseAbs().maxCoeff(), lo_model.train_outputs().cwiseAbs().maxCoeff());
    if (!(trend_max > 1e-12 * ref) || trend_max == 0.0)
        throw NumericalError(
            "hierarchical Kriging: the low-fidelity trend is numerically zero at the high-fidelity sites; "
            "the low-fidelity model carries no information here, use a single-fidelity model instead");

    HierarchicalKrigingModel model;
    model.lo_ = lo_model;
    const double scale = output_scale(hi_outputs);
    model.state_ = fit_state(model.lo_.input_normalizer().to_unit_columns(hi_inputs.values()), hi_outputs, trend, 0.0, scale,
                             scale, settings);
    return model;
}

Prediction predict_hk(const HierarchicalKrigingModel& model, const Eigen::Ref<const Eigen::VectorXd>& p) {
    const Prediction lo = predict_kriging(model.lo_, p);
    Prediction out = model.state_.predict(model.lo_.input_normalizer().to_unit(p), lo.mean);
    out.extrapolated = lo.extrapolated;
    return out;
}

nlohmann::json to_json(const KrigingModel& model) {
    auto j = state_json(model.state());
    j["kind"] = "kriging";
    j["normalizer"] = normalizer_json(model.input_normalizer());
    j["mu"] = model.mu();
    return j;
}

nlohmann::json to_json(const HierarchicalKrigingModel& model) {
    auto j = state_json(model.state());
    j["kind"] = "hierarchical_kriging";
    j["normalizer"] = normalizer_json(model.input_normalizer());
    j["beta"] = model.beta();
    j["trend"] = vec_json(model.trend());
    j["lo_model"] = to_json(model.lo_model());
    return j;
}

KrigingModel kriging_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "kriging") throw DataError("expected a Kriging model");
        KrigingModel m;
        m.normalizer_ = normalizer_from_json(j.at("normalizer"));
        const auto n = j.at("train_outputs").size();
        m.state_ = state_from_json(j, Eigen::VectorXd::Ones(static_cast<Index>(n)));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed Kriging model: ") + e.what());
    }
}

HierarchicalKrigingModel hk_from_json(const nlohmann::json& j) {
    try {
        if (j.at("kind").get<std::string>() != "hierarchical_kriging")
            throw DataError("expected a hierarchical Kriging model");
        HierarchicalKrigingModel m;
        m.lo_ = kriging_from_json(j.at("lo_model"));
        // The trend is re-evaluated from the low-fidelity model, not trusted from the file.
        const auto cols = j.at("train_inputs_unit").get<std::vector<std::vector<double>>>();
        Eigen::VectorXd trend(static_cast<Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Eigen::Map<const Eigen::VectorXd> u(cols[c].data(), static_cast<Index>(cols[c].size()));
            if (u.size() != m.lo_.input_normalizer().dim()) throw DataError("stored HK input has the wrong dimension");
            trend(static_cast<Index>(c)) = m.lo_.state_.predict(u, 1.0).mean;
        }
        m.state_ = state_from_json(j, std::move(trend));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed hierarchical Kriging model: ") + e.what());
    }
}

}  // namespace marom
