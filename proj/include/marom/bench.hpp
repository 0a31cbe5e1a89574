#pragma once

#include "marom/fields.hpp"
#include "marom/marom.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace marom::bench {

enum class FieldKind { displacement, stress };
enum class Scenario { grid, topology };

FieldKind parse_field(const std::string& s);
Scenario parse_scenario(const std::string& s);
std::string to_string(FieldKind f);
std::string to_string(Scenario s);

/// Clamped cantilever with distributed load q, tip load F and a taper factor,
/// p = (L, q, taper, F). Grids are normalised node positions xi in [0, 1];
/// physical positions are x = xi * L.
struct BeamProblem {
    Index d_hi = 201;
    Index d_lo = 41;
    Index d_aux = 151;  // cosine-clustered auxiliary grid of the topology scenario
    std::vector<Bounds> bounds{{8.0, 12.0}, {0.5, 2.0}, {0.2, 0.8}, {0.0, 1.0}};
    std::vector<std::string> names{"L", "q", "taper", "F"};
    double ei = 1.0;
    double cost_hi = 5.4402;  // CPU-seconds per sample
    double cost_lo = 0.5998;
};

Eigen::VectorXd uniform_grid(Index d);
/// xi_j = (1 - cos(pi j / (d - 1))) / 2.
Eigen::VectorXd cosine_grid(Index d);

/// Closed-form high-fidelity field.
Eigen::VectorXd beam_field_hi(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p, FieldKind kind,
                              const Eigen::VectorXd& grid);
/// Simplified physics: no taper, tip load scaled by tip_factor (0.5 by default).
Eigen::VectorXd beam_field_lo(const BeamProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& p, FieldKind kind,
                              const Eigen::VectorXd& grid, double tip_factor = 0.5);

struct ScenarioData {
    Dataset hi;
    Dataset lo;    // first n columns are the hi designs
    Dataset test;  // high-fidelity fields at designs disjoint from training
};

ScenarioData generate_scenario(const BeamProblem& problem, Scenario scenario, FieldKind field, Index n, Index m,
                               std::uint64_t seed, Index test_size = 200);

/// Test set only; run_study evaluates every cell of a replication on it.
Dataset generate_test_set(const BeamProblem& problem, FieldKind field, Index test_size, std::uint64_t seed);

struct StudyConfig {
    Scenario scenario = Scenario::grid;
    FieldKind field = FieldKind::displacement;
    std::vector<Index> n_values{20};
    std::vector<double> tau_values{2, 4, 8};
    int reps = 20;
    Index test_size = 200;
    std::uint64_t seed = 1;
    double cost_hi = 5.4402;
    double cost_lo = 0.5998;
    int jobs = 1;
    TrainConfig train;
};

StudyConfig study_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudyConfig& c);

struct StudyRow {
    Index n = 0;
    Index m = 0;       // 0 for single-fidelity rows
    double tau = 0.0;  // 0 for single-fidelity rows
    double e_norm_mean = 0.0;
    double e_norm_std = 0.0;
    double cost_cpusec = 0.0;
    int reps = 0;  // successful replications
    int failures = 0;
    std::vector<double> e_norm;  // per successful replication, in rep order
};

struct StudyTable {
    std::vector<StudyRow> marom;  // one row per (n, tau), in config order
    std::vector<StudyRow> sfrom;  // one row per n
};

StudyTable run_study(const StudyConfig& config);

/// columns: n,m,tau,e_norm_mean,e_norm_std,cost_cpusec,reps
std::string table_csv(const std::vector<StudyRow>& rows);
nlohmann::json to_json(const StudyTable& table, const StudyConfig& config);

}  // namespace marom::bench
