#include "marom/cli.hpp"

#include "marom/bench.hpp"
#include "marom/csv.hpp"
#include "marom/error.hpp"
#include "marom/marom.hpp"
#include "marom/metrics.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <optional>
#include <ostream>

namespace marom::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TrainArgs {
    std::string hi, lo, out;
    std::optional<double> ric;
    std::optional<Index> k;
    std::uint64_t seed = 0;
    bool single = false;
};

struct PredictArgs {
    std::string model, designs, out;
};

struct EvaluateArgs {
    std::string model, test, out;
};

struct StudyArgs {
    std::string config, out;
    std::optional<int> jobs;
};

struct GenerateArgs {
    std::string problem = "beam", scenario = "grid", field = "displacement", out;
    Index n = 20, m = 40, test_size = 200;
    std::uint64_t seed = 0;
};

json run_train(const TrainArgs& a) {
    TrainConfig config;
    if (a.ric) config.ric_threshold = *a.ric;
    if (!(config.ric_threshold > 0.0 && config.ric_threshold <= 1.0)) throw UsageError("--ric must lie in (0, 1]");
    config.k_override = a.k;
    config.seed = a.seed;

    const Dataset hi = load_dataset(a.hi);
    json result{{"command", "train"}, {"status", "ok"}, {"out", a.out}};
    if (a.single) {
        if (!a.lo.empty()) throw UsageError("--lo cannot be combined with --single-fidelity");
        const SfRomModel model = train_sfrom(hi, config);
        save_bundle(model, a.out);
        result["kind"] = "sfrom";
        result["k"] = model.basis.k();
        result["achieved_ric"] = model.basis.achieved_ric();
    } else {
        if (a.lo.empty()) throw UsageError("train needs --lo (or --single-fidelity)");
        const Dataset lo = load_dataset(a.lo);
        const MaRomModel model = train_marom(hi, lo, config);
        save_bundle(model, a.out);
        result["kind"] = "marom";
        result["k"] = model.hi_basis.k();
        result["achieved_ric"] = model.hi_basis.achieved_ric();
        result["procrustes_residual"] = model.transform.residual;
    }
    return result;
}

json run_predict(const PredictArgs& a) {
    const RomModel model = load_bundle(a.model);
    const Eigen::MatrixXd designs = csv::read_matrix(a.designs);
    const Index b = design_dim(model);
    if (designs.rows() != b)
        throw DataError("design CSV has " + std::to_string(designs.rows()) + " rows (parameters) but the model expects " +
                        std::to_string(b));
    if (designs.cols() < 1) throw DataError("design CSV has no columns");
    const Eigen::MatrixXd fields = predict_fields(model, designs);
    csv::write_matrix(a.out, fields);
    return {{"command", "predict"}, {"status", "ok"}, {"out", a.out}, {"designs", designs.cols()}, {"d", fields.rows()}};
}

json run_evaluate(const EvaluateArgs& a) {
    const RomModel model = load_bundle(a.model);
    const Dataset test = load_dataset(a.test);
    const Index b = design_dim(model);
    if (test.designs.params() != b)
        throw DataError("test designs have " + std::to_string(test.designs.params()) +
                        " parameters but the model expects " + std::to_string(b));
    const PodBasis& basis = output_basis(model);
    if (test.snapshots.dofs() != basis.dim())
        throw DataError("test fields have " + std::to_string(test.snapshots.dofs()) + " dofs but the model predicts " +
                        std::to_string(basis.dim()));
    const ErrorReport report =
        error_report(predict_fields(model, test.designs.values()), test.snapshots.values(), basis.mean());
    csv::write_text(a.out, to_json(report).dump(2) + "\n");
    return {{"command", "evaluate"}, {"status", "ok"},         {"out", a.out},
            {"e_abs", report.e_abs}, {"e_norm", report.e_norm}, {"n_test", report.n_test}};
}

json run_study_cmd(const StudyArgs& a) {
    json cfg_json;
    try {
        cfg_json = json::parse(csv::read_text(a.config));
    } catch (const json::parse_error& e) {
        throw UsageError("study config " + a.config + " is not valid JSON: " + e.what());
    }
    bench::StudyConfig config = bench::study_config_from_json(cfg_json);
    if (a.jobs) {
        if (*a.jobs < 1) throw UsageError("--jobs must be at least 1");
        config.jobs = *a.jobs;
    }
    const bench::StudyTable table = bench::run_study(config);
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    csv::write_text(dir / "study.csv", bench::table_csv(table.marom));
    csv::write_text(dir / "sf_rom.csv", bench::table_csv(table.sfrom));
    csv::write_text(dir / "summary.json", bench::to_json(table, config).dump(2) + "\n");
    return {{"command", "study"}, {"status", "ok"}, {"out", a.out}, {"rows", table.marom.size()}};
}

json run_generate(const GenerateArgs& a) {
    if (a.problem != "beam") throw UsageError("unknown problem '" + a.problem + "' (only 'beam' is available)");
    const bench::BeamProblem problem;
    const auto data = bench::generate_scenario(problem, bench::parse_scenario(a.scenario), bench::parse_field(a.field),
                                               a.n, a.m, a.seed, a.test_size);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    save_dataset(data.hi, dir / "hi.json");
    save_dataset(data.lo, dir / "lo.json");
    save_dataset(data.test, dir / "test.json");
    return {{"command", "generate"}, {"status", "ok"}, {"out", a.out},
            {"hi", (dir / "hi.json").string()}, {"lo", (dir / "lo.json").string()},
            {"test", (dir / "test.json").string()}};
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Manifold-alignment multi-fidelity reduced-order models", "marom"};
    app.require_subcommand(1, 1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train an MA-ROM (or single-fidelity ROM) bundle");
    train_cmd->add_option("--hi", train.hi, "High-fidelity dataset manifest")->required();
    train_cmd->add_option("--lo", train.lo, "Low-fidelity dataset manifest");
    train_cmd->add_option("--out", train.out, "Output bundle directory")->required();
    train_cmd->add_option("--ric", train.ric, "RIC truncation threshold in (0, 1]");
    train_cmd->add_option("--k", train.k, "Fixed latent dimension");
    train_cmd->add_option("--seed", train.seed, "Random seed");
    train_cmd->add_flag("--single-fidelity", train.single, "Train on high-fidelity data only");

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Predict fields at new designs");
    predict_cmd->add_option("--model", predict.model, "Model bundle directory")->required();
    predict_cmd->add_option("--designs", predict.designs, "Design CSV (b rows x N columns)")->required();
    predict_cmd->add_option("--out", predict.out, "Output CSV (one column per design)")->required();

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Prediction error on a test dataset");
    evaluate_cmd->add_option("--model", evaluate.model, "Model bundle directory")->required();
    evaluate_cmd->add_option("--test", evaluate.test, "Test dataset manifest")->required();
    evaluate_cmd->add_option("--out", evaluate.out, "Output JSON error report")->required();

    StudyArgs study;
    auto* study_cmd = app.add_subcommand("study", "Run a repetition-averaged benchmark study");
    study_cmd->add_option("--config", study.config, "Study configuration JSON")->required();
    study_cmd->add_option("--out", study.out, "Output directory")->required();
    study_cmd->add_option("--jobs", study.jobs, "Concurrent replications");

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Write synthetic benchmark datasets");
    gen_cmd->add_option("--problem", gen.problem, "Benchmark problem")->default_val("beam");
    gen_cmd->add_option("--scenario", gen.scenario, "grid or topology")->default_val("grid");
    gen_cmd->add_option("--field", gen.field, "displacement or stress")->default_val("displacement");
    gen_cmd->add_option("--n", gen.n, "High-fidelity samples")->default_val(20);
    gen_cmd->add_option("--m", gen.m, "Low-fidelity samples (>= n)")->default_val(40);
    gen_cmd->add_option("--test-size", gen.test_size, "Test samples")->default_val(200);
    gen_cmd->add_option("--seed", gen.seed, "Random seed")->default_val(0);
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage_error;
    }

    try {
        json result;
        if (*train_cmd)
            result = run_train(train);
        else if (*predict_cmd)
            result = run_predict(predict);
        else if (*evaluate_cmd)
            result = run_evaluate(evaluate);
        else if (*study_cmd)
            result = run_study_cmd(study);
        else
            result = run_generate(gen);
        out << result.dump() << '\n';
        return ok;
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::usage:
                err << "usage error: " << e.what() << '\n';
                return usage_error;
            case ErrorKind::data:
                err << "data error: " << e.what() << '\n';
                return data_error;
            case ErrorKind::numerical:
                err << "numerical failure: " << e.what() << '\n';
                return numerical_failure;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    }
    return numerical_failure;
}

}  // namespace marom::cli
