#include "marom/bench.hpp"

#include "marom/csv.hpp"
#include "marom/error.hpp"
#include "marom/log.hpp"
#include "marom/metrics.hpp"
#include "marom/rng.hpp"
#include "marom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <numbers>
#include <optional>

namespace marom::bench {
namespace {

void check_design(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p) {
    if (p.size() != 4) throw DataError("beam designs have 4 parameters, got " + std::to_string(p.size()));
    for (Index i = 0; i < 4; ++i) {
        const Bounds& b = problem.bounds[static_cast<std::size_t>(i)];
        const double slack = kDesignMatchTolerance * b.range();
        if (!(p(i) >= b.lower - slack && p(i) <= b.upper + slack))
            throw DataError("beam parameter " + problem.names[static_cast<std::size_t>(i)] + " = " +
                            csv::format_double(p(i)) + " is outside its bounds");
    }
}

// Shared closed form: the bracketed load response times the taper multiplier.
Eigen::VectorXd beam_field(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p, FieldKind kind,
                           const Eigen::VectorXd& grid, double taper, double tip_load) {
    check_design(problem, p);
    const double len = p(0);
    const double q = p(1);
    const double ei = problem.ei;
    Eigen::VectorXd out(grid.size());
    for (Index j = 0; j < grid.size(); ++j) {
        const double x = grid(j) * len;
        const double r = x / len;
        const double mult = 1.0 + taper * r * r;
        double base;
        if (kind == FieldKind::displacement) {
            base = q * x * x * (6.0 * len * len - 4.0 * len * x + x * x) / (24.0 * ei) +
                   tip_load * x * x * (3.0 * len - x) / (6.0 * ei);
        } else {
            base = q * (len - x) * (len - x) / 2.0 + tip_load * (len - x);
        }
        out(j) = base * mult;
    }
    return out;
}

std::vector<std::string> node_ids(Index d) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) ids.push_back(std::to_string(i));
    return ids;
}

Dataset evaluate_designs(const DesignMatrix& designs, const std::string& fidelity, double cost,
                         const std::string& field_name, Index d,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) {
    Eigen::MatrixXd snaps(d, designs.samples());
    for (Index j = 0; j < designs.samples(); ++j) snaps.col(j) = f(designs.point(j));
    return Dataset(designs, SnapshotMatrix(std::move(snaps), field_name, node_ids(d)), fidelity, cost);
}

bool shares_point(const DesignMatrix& a, const DesignMatrix& b) {
    for (Index i = 0; i < a.samples(); ++i)
        for (Index j = 0; j < b.samples(); ++j)
            if (a.same_point(a.values().col(i), b.values().col(j))) return true;
    return false;
}

DesignMatrix design_lhs(const BeamProblem& problem, Index n, std::uint64_t seed) {
    LhsConfig cfg;
    cfg.n = n;
    cfg.bounds = problem.bounds;
    cfg.names = problem.names;
    cfg.seed = seed;
    return lhs_maximin(cfg);
}

// LHS disjoint from every matrix in `avoid`, re-seeding on collision.
DesignMatrix disjoint_lhs(const BeamProblem& problem, Index n, std::uint64_t seed,
                          const std::vector<const DesignMatrix*>& avoid) {
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        DesignMatrix d = design_lhs(problem, n, derive_seed(seed, attempt));
        bool clash = false;
        for (const auto* other : avoid) clash = clash || shares_point(d, *other);
        if (!clash) return d;
    }
    throw NumericalError("could not draw a design set disjoint from the training designs");
}

std::string field_label(FieldKind f) { return f == FieldKind::displacement ? "displacement" : "stress"; }

DesignMatrix concat(const DesignMatrix& a, const DesignMatrix& b) {
    Eigen::MatrixXd v(a.params(), a.samples() + b.samples());
    v << a.values(), b.values();
    return DesignMatrix(std::move(v), a.names(), a.bounds());
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

FieldKind parse_field(const std::string& s) {
    if (s == "displacement") return FieldKind::displacement;
    if (s == "stress") return FieldKind::stress;
    throw UsageError("unknown field '" + s + "' (expected displacement or stress)");
}

Scenario parse_scenario(const std::string& s) {
    if (s == "grid") return Scenario::grid;
    if (s == "topology") return Scenario::topology;
    throw UsageError("unknown scenario '" + s + "' (expected grid or topology)");
}

std::string to_string(FieldKind f) { return field_label(f); }
std::string to_string(Scenario s) { return s == Scenario::grid ? "grid" : "topology"; }

Eigen::VectorXd uniform_grid(Index d) {
    if (d < 2) throw UsageError("a grid needs at least 2 nodes");
    return Eigen::VectorXd::LinSpaced(d, 0.0, 1.0);
}

Eigen::VectorXd cosine_grid(Index d) {
    if (d < 2) throw UsageError("a grid needs at least 2 nodes");
    Eigen::VectorXd g(d);
    for (Index j = 0; j < d; ++j)
        g(j) = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(d - 1)));
    g(0) = 0.0;
    g(d - 1) = 1.0;
    return g;
}

Eigen::VectorXd beam_field_hi(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p, FieldKind kind,
                              const Eigen::VectorXd& grid) {
    return beam_field(problem, p, kind, grid, p.size() == 4 ? p(2) : 0.0, p.size() == 4 ? p(3) : 0.0);
}

Eigen::VectorXd beam_field_lo(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p, FieldKind kind,
                              const Eigen::VectorXd& grid, double tip_factor) {
    return beam_field(problem, p, kind, grid, 0.0, p.size() == 4 ? tip_factor * p(3) : 0.0);
}

Dataset generate_test_set(const BeamProblem& problem, FieldKind field, Index test_size, std::uint64_t seed) {
    const Eigen::VectorXd grid = uniform_grid(problem.d_hi);
    return evaluate_designs(design_lhs(problem, test_size, seed), "test", problem.cost_hi, field_label(field),
                            problem.d_hi,
                            [&](const Eigen::VectorXd& p) { return beam_field_hi(problem, p, field, grid); });
}

ScenarioData generate_scenario(const BeamProblem& problem, Scenario scenario, FieldKind field, Index n, Index m,
                               std::uint64_t seed, Index test_size) {
    if (n < 1) throw UsageError("scenario needs n >= 1");
    if (m < n) throw UsageError("scenario needs m >= n (got n = " + std::to_string(n) + ", m = " + std::to_string(m) + ")");
    if (!(problem.d_hi > problem.d_lo && problem.d_lo >= 5))
        throw UsageError("beam grids need d_hi > d_lo >= 5");

    const Eigen::VectorXd hi_grid = uniform_grid(problem.d_hi);
    const DesignMatrix hi_designs = design_lhs(problem, n, derive_seed(seed, 1));
    const std::string label = field_label(field);

    Dataset hi = evaluate_designs(hi_designs, "hi", problem.cost_hi, label, problem.d_hi,
                                  [&](const Eigen::VectorXd& p) { return beam_field_hi(problem, p, field, hi_grid); });

    const DesignMatrix lo_designs =
        m > n ? concat(hi_designs, disjoint_lhs(problem, m - n, derive_seed(seed, 2), {&hi_designs})) : hi_designs;

    std::optional<Dataset> lo;
    if (scenario == Scenario::grid) {
        const Eigen::VectorXd grid = uniform_grid(problem.d_lo);
        lo = evaluate_designs(lo_designs, "lo-grid", problem.cost_lo, label, problem.d_lo,
                              [&](const Eigen::VectorXd& p) { return beam_field_lo(problem, p, field, grid); });
    } else {
        const Eigen::VectorXd grid = cosine_grid(problem.d_aux);
        lo = evaluate_designs(lo_designs, "lo-topology", problem.cost_lo, label, problem.d_aux,
                              [&](const Eigen::VectorXd& p) { return beam_field_lo(problem, p, field, grid, 0.0); });
    }

    const DesignMatrix test_designs = disjoint_lhs(problem, test_size, derive_seed(seed, 3), {&lo_designs});
    Dataset test = evaluate_designs(test_designs, "test", problem.cost_hi, label, problem.d_hi,
                                    [&](const Eigen::VectorXd& p) { return beam_field_hi(problem, p, field, hi_grid); });
    return ScenarioData{std::move(hi), std::move(*lo), std::move(test)};
}

StudyConfig study_config_from_json(const nlohmann::json& j) {
    StudyConfig c;
    try {
        if (j.contains("scenario")) c.scenario = parse_scenario(j["scenario"].get<std::string>());
        if (j.contains("field")) c.field = parse_field(j["field"].get<std::string>());
        if (j.contains("n_values")) c.n_values = j["n_values"].get<std::vector<Index>>();
        if (j.contains("tau_values")) c.tau_values = j["tau_values"].get<std::vector<double>>();
        c.reps = j.value("reps", c.reps);
        c.test_size = j.value("test_size", c.test_size);
        c.seed = j.value("seed", c.seed);
        c.cost_hi = j.value("cost_hi", c.cost_hi);
        c.cost_lo = j.value("cost_lo", c.cost_lo);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("train")) c.train = train_config_from_json(j["train"]);
        if (j.contains("ric_threshold")) c.train.ric_threshold = j["ric_threshold"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed study configuration: ") + e.what());
    }
    if (c.n_values.empty() || c.tau_values.empty()) throw UsageError("study needs at least one n and one tau");
    for (Index n : c.n_values)
        if (n < 2) throw UsageError("study n values must be at least 2");
    for (double t : c.tau_values)
        if (!(t >= 1.0)) throw UsageError("study tau values must be at least 1");
    if (c.reps < 1 || c.test_size < 1 || c.jobs < 1) throw UsageError("study reps, test_size and jobs must be positive");
    return c;
}

nlohmann::json to_json(const StudyConfig& c) {
    return {{"scenario", to_string(c.scenario)}, {"field", to_string(c.field)},  {"n_values", c.n_values},
            {"tau_values", c.tau_values},        {"reps", c.reps},               {"test_size", c.test_size},
            {"seed", c.seed},                    {"cost_hi", c.cost_hi},         {"cost_lo", c.cost_lo},
            {"train", marom::to_json(c.train)}};
}

namespace {

struct RepResult {
    std::vector<std::optional<double>> sf;  // per n
    std::vector<std::optional<double>> ma;  // per (n, tau), n-major
};

Index lo_count(Index n, double tau) { return static_cast<Index>(std::llround(tau * static_cast<double>(n))); }

RepResult run_rep(const StudyConfig& config, int rep) {
    const BeamProblem problem;
    const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
    TrainConfig train = config.train;
    train.seed = rep_seed;

    RepResult out;
    for (Index n : config.n_values) {
        try {
            const ScenarioData base = generate_scenario(problem, config.scenario, config.field, n, n, rep_seed,
                                                        config.test_size);
            const SfRomModel sf = train_sfrom(base.hi, train);
            out.sf.push_back(normalized_error(predict_fields(sf, base.test.designs.values()),
                                              base.test.snapshots.values(), sf.basis.mean()));
        } catch (const Error& e) {
            log::warn("SF-ROM failed (n=" + std::to_string(n) + ", seed=" + std::to_string(rep_seed) + "): " + e.what());
            out.sf.push_back(std::nullopt);
        }
        for (double tau : config.tau_values) {
            const Index m = lo_count(n, tau);
            try {
                const ScenarioData data =
                    generate_scenario(problem, config.scenario, config.field, n, m, rep_seed, config.test_size);
                const MaRomModel ma = train_marom(data.hi, data.lo, train);
                out.ma.push_back(normalized_error(predict_fields(ma, data.test.designs.values()),
                                                  data.test.snapshots.values(), ma.hi_basis.mean()));
            } catch (const Error& e) {
                log::warn("MA-ROM failed (n=" + std::to_string(n) + ", tau=" + csv::format_double(tau) +
                          ", seed=" + std::to_string(rep_seed) + "): " + e.what());
                out.ma.push_back(std::nullopt);
            }
        }
        log::debug("rep " + std::to_string(rep) + " n=" + std::to_string(n) + " done");
    }
    return out;
}

StudyRow summarize(Index n, Index m, double tau, double cost, const std::vector<std::optional<double>>& values) {
    StudyRow row{n, m, tau, 0.0, 0.0, cost, 0, 0, {}};
    for (const auto& v : values) {
        if (v)
            row.e_norm.push_back(*v);
        else
            ++row.failures;
    }
    row.reps = static_cast<int>(row.e_norm.size());
    row.e_norm_mean = mean_of(row.e_norm);
    row.e_norm_std = std_of(row.e_norm);
    return row;
}

}  // namespace

StudyTable run_study(const StudyConfig& config) {
    std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
    const int jobs = std::max(1, std::min(config.jobs, config.reps));
    if (jobs == 1) {
        for (int r = 0; r < config.reps; ++r) results[static_cast<std::size_t>(r)] = run_rep(config, r);
    } else {
        // Strided assignment; results land in their rep slot so aggregation order is fixed.
        std::vector<std::future<void>> workers;
        for (int w = 0; w < jobs; ++w)
            workers.push_back(std::async(std::launch::async, [&, w] {
                for (int r = w; r < config.reps; r += jobs) results[static_cast<std::size_t>(r)] = run_rep(config, r);
            }));
        for (auto& f : workers) f.get();
    }

    StudyTable table;
    const std::size_t n_tau = config.tau_values.size();
    for (std::size_t in = 0; in < config.n_values.size(); ++in) {
        const Index n = config.n_values[in];
        std::vector<std::optional<double>> sf;
        for (const auto& r : results) sf.push_back(r.sf[in]);
        table.sfrom.push_back(summarize(n, 0, 0.0, training_cost(n, 0, config.cost_hi, config.cost_lo), sf));
        for (std::size_t it = 0; it < n_tau; ++it) {
            const double tau = config.tau_values[it];
            const Index m = lo_count(n, tau);
            std::vector<std::optional<double>> ma;
            for (const auto& r : results) ma.push_back(r.ma[in * n_tau + it]);
            table.marom.push_back(summarize(n, m, tau, training_cost(n, m, config.cost_hi, config.cost_lo), ma));
        }
    }

    auto check = [&](const StudyRow& row, const char* what) {
        if (2 * row.failures > config.reps)
            throw NumericalError(std::string(what) + " failed in " + std::to_string(row.failures) + " of " +
                                 std::to_string(config.reps) + " replications (n=" + std::to_string(row.n) +
                                 ", tau=" + csv::format_double(row.tau) + ", seed=" + std::to_string(config.seed) + ")");
    };
    for (const auto& row : table.sfrom) check(row, "SF-ROM");
    for (const auto& row : table.marom) check(row, "MA-ROM");
    return table;
}

std::string table_csv(const std::vector<StudyRow>& rows) {
    std::string out = "n,m,tau,e_norm_mean,e_norm_std,cost_cpusec,reps\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + ',' + std::to_string(r.m) + ',' + csv::format_double(r.tau) + ',' +
               csv::format_double(r.e_norm_mean) + ',' + csv::format_double(r.e_norm_std) + ',' +
               csv::format_double(r.cost_cpusec) + ',' + std::to_string(r.reps) + '\n';
    }
    return out;
}

nlohmann::json to_json(const StudyTable& table, const StudyConfig& config) {
    auto rows = [](const std::vector<StudyRow>& rs) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : rs)
            a.push_back({{"n", r.n},
                         {"m", r.m},
                         {"tau", r.tau},
                         {"e_norm_mean", r.e_norm_mean},
                         {"e_norm_std", r.e_norm_std},
                         {"cost_cpusec", r.cost_cpusec},
                         {"reps", r.reps},
                         {"failures", r.failures},
                         {"e_norm", r.e_norm}});
        return a;
    };
    return {{"config", to_json(config)}, {"marom", rows(table.marom)}, {"sfrom", rows(table.sfrom)}};
}

}  // namespace marom::bench
