#include "marom/csv.hpp"
#include "marom/error.hpp"
#include "marom/marom.hpp"

#include <cstdio>

namespace marom {
namespace {

using nlohmann::json;

std::string latent_file(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "latent_%03zu.json", i);
    return buf;
}

json provenance_json(const Provenance& p) {
    json j{{"hi_hash", p.hi_hash},   {"lo_hash", p.lo_hash}, {"hi_fidelity", p.hi_fidelity},
           {"lo_fidelity", p.lo_fidelity}, {"n_hi", p.n_hi}, {"m_lo", p.m_lo},
           {"seed", p.seed},         {"warnings", p.warnings}};
    j["created"] = p.created ? json(*p.created) : json(nullptr);
    return j;
}

Provenance provenance_from_json(const json& j) {
    Provenance p;
    p.hi_hash = j.value("hi_hash", "");
    p.lo_hash = j.value("lo_hash", "");
    p.hi_fidelity = j.value("hi_fidelity", "");
    p.lo_fidelity = j.value("lo_fidelity", "");
    p.n_hi = j.value("n_hi", Index{0});
    p.m_lo = j.value("m_lo", Index{0});
    p.seed = j.value("seed", std::uint64_t{0});
    p.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("created") && j["created"].is_string()) p.created = j["created"].get<std::string>();
    return p;
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(csv::read_text(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + " is not valid JSON: " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) { csv::write_text(path, j.dump(2) + "\n"); }

}  // namespace

json to_json(const TrainConfig& c) {
    json j{{"ric_threshold", c.ric_threshold},
           {"seed", c.seed},
           {"kriging",
            {{"starts", c.kriging.starts},
             {"max_iters", c.kriging.max_iters},
             {"theta_min", c.kriging.theta_min},
             {"theta_max", c.kriging.theta_max},
             {"nugget", c.kriging.nugget},
             {"nugget_max", c.kriging.nugget_max},
             {"step_tol", c.kriging.step_tol}}}};
    j["k_override"] = c.k_override ? json(*c.k_override) : json(nullptr);
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    try {
        c.ric_threshold = j.value("ric_threshold", c.ric_threshold);
        c.seed = j.value("seed", c.seed);
        if (j.contains("k_override") && !j["k_override"].is_null()) c.k_override = j["k_override"].get<Index>();
        if (j.contains("kriging")) {
            const json& k = j["kriging"];
            c.kriging.starts = k.value("starts", c.kriging.starts);
            c.kriging.max_iters = k.value("max_iters", c.kriging.max_iters);
            c.kriging.theta_min = k.value("theta_min", c.kriging.theta_min);
            c.kriging.theta_max = k.value("theta_max", c.kriging.theta_max);
            c.kriging.nugget = k.value("nugget", c.kriging.nugget);
            c.kriging.nugget_max = k.value("nugget_max", c.kriging.nugget_max);
            c.kriging.step_tol = k.value("step_tol", c.kriging.step_tol);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed training configuration: ") + e.what());
    }
    if (!(c.ric_threshold > 0.0 && c.ric_threshold <= 1.0)) throw UsageError("ric_threshold must lie in (0, 1]");
    return c;
}

void save_bundle(const RomModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = kBundleFormat;
    json files = json::array();

    if (const auto* ma = std::get_if<MaRomModel>(&model)) {
        manifest["kind"] = "marom";
        manifest["k"] = ma->hi_basis.k();
        manifest["d"] = ma->hi_basis.dim();
        manifest["b"] = design_dim(model);
        manifest["config"] = to_json(ma->config);
        manifest["provenance"] = provenance_json(ma->provenance);
        manifest["latent_dims"] = {{"k_hi", ma->dims.k_hi},
                                   {"k_lo", ma->dims.k_lo},
                                   {"k", ma->dims.k},
                                   {"k_lo_modes", ma->dims.k_lo_modes}};
        save_basis(ma->hi_basis, dir, "hi_basis");
        save_basis(ma->lo_basis, dir, "lo_basis");
        write_json(dir / "transform.json", to_json(ma->transform));
        for (std::size_t i = 0; i < ma->latent_models.size(); ++i) {
            write_json(dir / latent_file(i), to_json(ma->latent_models[i]));
            files.push_back(latent_file(i));
        }
    } else {
        const auto& sf = std::get<SfRomModel>(model);
        manifest["kind"] = "sfrom";
        manifest["k"] = sf.basis.k();
        manifest["d"] = sf.basis.dim();
        manifest["b"] = design_dim(model);
        manifest["config"] = to_json(sf.config);
        manifest["provenance"] = provenance_json(sf.provenance);
        save_basis(sf.basis, dir, "hi_basis");
        for (std::size_t i = 0; i < sf.latent_models.size(); ++i) {
            write_json(dir / latent_file(i), to_json(sf.latent_models[i]));
            files.push_back(latent_file(i));
        }
    }
    manifest["latent_models"] = files;
    write_json(dir / "manifest.json", manifest);
}

RomModel load_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "manifest.json"))
        throw DataError("no model bundle at " + dir.string() + " (manifest.json missing)");
    const json manifest = read_json(dir / "manifest.json");
    try {
        if (manifest.at("format").get<std::string>() != kBundleFormat)
            throw DataError("unsupported bundle format '" + manifest.at("format").get<std::string>() + "'");
        const std::string kind = manifest.at("kind").get<std::string>();
        const auto files = manifest.at("latent_models").get<std::vector<std::string>>();
        if (kind == "marom") {
            MaRomModel m;
            m.config = train_config_from_json(manifest.at("config"));
            m.provenance = provenance_from_json(manifest.at("provenance"));
            const json& dims = manifest.at("latent_dims");
            m.dims = {dims.at("k_hi").get<Index>(), dims.at("k_lo").get<Index>(), dims.at("k").get<Index>(),
                      dims.at("k_lo_modes").get<Index>()};
            m.hi_basis = load_basis(dir, "hi_basis");
            m.lo_basis = load_basis(dir, "lo_basis");
            m.transform = transform_from_json(read_json(dir / "transform.json"));
            for (const auto& f : files) m.latent_models.push_back(hk_from_json(read_json(dir / f)));
            if (static_cast<Index>(m.latent_models.size()) != m.hi_basis.k())
                throw DataError("bundle has " + std::to_string(m.latent_models.size()) + " latent models for k = " +
                                std::to_string(m.hi_basis.k()));
            return m;
        }
        if (kind == "sfrom") {
            SfRomModel m;
            m.config = train_config_from_json(manifest.at("config"));
            m.provenance = provenance_from_json(manifest.at("provenance"));
            m.basis = load_basis(dir, "hi_basis");
            for (const auto& f : files) m.latent_models.push_back(kriging_from_json(read_json(dir / f)));
            if (static_cast<Index>(m.latent_models.size()) != m.basis.k())
                throw DataError("bundle has " + std::to_string(m.latent_models.size()) + " latent models for k = " +
                                std::to_string(m.basis.k()));
            return m;
        }
        throw DataError("unknown bundle kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw DataError("malformed bundle manifest: " + std::string(e.what()));
    }
}

}  // namespace marom
