#include "marom/fields.hpp"

#include "marom/csv.hpp"
#include "marom/error.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

namespace marom {
namespace {

void require_finite(const Eigen::MatrixXd& m, const std::string& what) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j)))
                throw DataError(what + " has a non-finite value at row " + std::to_string(i + 1) + ", column " +
                                std::to_string(j + 1));
}

}  // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names, std::vector<Bounds> bounds)
    : values_(std::move(values)), names_(std::move(names)), bounds_(std::move(bounds)) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw DataError("design matrix needs at least one parameter and one sample, got " +
                        std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()));
    if (static_cast<Index>(bounds_.size()) != values_.rows())
        throw DataError("design matrix has " + std::to_string(values_.rows()) + " parameters but " +
                        std::to_string(bounds_.size()) + " bounds");
    if (names_.empty()) {
        for (Index i = 0; i < values_.rows(); ++i) names_.push_back("p" + std::to_string(i));
    } else if (static_cast<Index>(names_.size()) != values_.rows()) {
        throw DataError("design matrix has " + std::to_string(values_.rows()) + " parameters but " +
                        std::to_string(names_.size()) + " names");
    }
    require_finite(values_, "design matrix");
    for (Index i = 0; i < values_.rows(); ++i) {
        const Bounds& b = bounds_[static_cast<std::size_t>(i)];
        if (!(std::isfinite(b.lower) && std::isfinite(b.upper) && b.lower < b.upper))
            throw DataError("invalid bounds for parameter '" + names_[static_cast<std::size_t>(i)] + "'");
        const double slack = kDesignMatchTolerance * b.range();
        for (Index j = 0; j < values_.cols(); ++j) {
            const double v = values_(i, j);
            if (v < b.lower - slack || v > b.upper + slack)
                throw DataError("design column " + std::to_string(j) + " parameter '" +
                                names_[static_cast<std::size_t>(i)] + "' = " + csv::format_double(v) +
                                " is outside [" + csv::format_double(b.lower) + ", " + csv::format_double(b.upper) +
                                "]");
        }
    }
}

bool DesignMatrix::same_point(const Eigen::Ref<const Eigen::VectorXd>& a,
                              const Eigen::Ref<const Eigen::VectorXd>& b) const {
    for (Index i = 0; i < params(); ++i)
        if (std::abs(a(i) - b(i)) > kDesignMatchTolerance * bounds_[static_cast<std::size_t>(i)].range()) return false;
    return true;
}

std::vector<std::pair<Index, Index>> DesignMatrix::duplicate_pairs() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index i = 0; i < samples(); ++i)
        for (Index j = i + 1; j < samples(); ++j)
            if (same_point(values_.col(i), values_.col(j))) out.emplace_back(i, j);
    return out;
}

DesignMatrix DesignMatrix::select(const std::vector<Index>& columns) const {
    Eigen::MatrixXd v(params(), static_cast<Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) v.col(static_cast<Index>(j)) = values_.col(columns[j]);
    return DesignMatrix(std::move(v), names_, bounds_);
}

SnapshotMatrix::SnapshotMatrix(Eigen::MatrixXd values, std::string field_name, std::vector<std::string> node_ids)
    : values_(std::move(values)), field_name_(std::move(field_name)), node_ids_(std::move(node_ids)) {
    if (values_.rows() < 1) throw DataError("snapshot matrix has no degrees of freedom");
    if (node_ids_.empty()) {
        node_ids_.reserve(static_cast<std::size_t>(values_.rows()));
        for (Index i = 0; i < values_.rows(); ++i) node_ids_.push_back(std::to_string(i));
    } else if (static_cast<Index>(node_ids_.size()) != values_.rows()) {
        throw DataError("snapshot matrix has " + std::to_string(values_.rows()) + " rows but " +
                        std::to_string(node_ids_.size()) + " node ids");
    }
    require_finite(values_, "snapshot matrix");
}

SnapshotMatrix SnapshotMatrix::select(const std::vector<Index>& columns) const {
    Eigen::MatrixXd v(dofs(), static_cast<Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) v.col(static_cast<Index>(j)) = values_.col(columns[j]);
    return SnapshotMatrix(std::move(v), field_name_, node_ids_);
}

Dataset::Dataset(DesignMatrix d, SnapshotMatrix s, std::string fid, double cost)
    : designs(std::move(d)), snapshots(std::move(s)), fidelity(std::move(fid)), cost_per_sample(cost) {
    if (designs.samples() != snapshots.samples())
        throw DataError("dimension mismatch: designs have " + std::to_string(designs.samples()) +
                        " samples but snapshots have " + std::to_string(snapshots.samples()) + " columns");
    if (!(std::isfinite(cost_per_sample) && cost_per_sample >= 0.0))
        throw DataError("cost_per_sample must be a nonnegative number");
}

Dataset Dataset::select(const std::vector<Index>& columns) const {
    return Dataset(designs.select(columns), snapshots.select(columns), fidelity, cost_per_sample);
}

CenteredSnapshots center(const Eigen::MatrixXd& x) {
    if (x.rows() == 0 || x.cols() == 0) throw DataError("cannot center an empty snapshot matrix");
    CenteredSnapshots out;
    out.mean = x.rowwise().mean();
    out.values = x.colwise() - out.mean;
    return out;
}

CenteredSnapshots center(const SnapshotMatrix& snapshots) { return center(snapshots.values()); }

LinkedSplit split_linked(const Dataset& lo, const DesignMatrix& linked) {
    if (linked.params() != lo.designs.params())
        throw DataError("linked designs have " + std::to_string(linked.params()) +
                        " parameters, low-fidelity designs have " + std::to_string(lo.designs.params()));
    const Index m = lo.samples();
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    LinkedSplit out{lo.snapshots, lo.snapshots, {}, linked.samples()};
    out.permutation.reserve(static_cast<std::size_t>(m));

    for (Index j = 0; j < linked.samples(); ++j) {
        Index match = -1;
        for (Index c = 0; c < m; ++c) {
            if (!lo.designs.same_point(linked.values().col(j), lo.designs.values().col(c))) continue;
            if (match >= 0)
                throw DataError("linked design column " + std::to_string(j) + " matches multiple low-fidelity columns (" +
                                std::to_string(match) + " and " + std::to_string(c) + ")");
            match = c;
        }
        if (match < 0)
            throw DataError("linked design column " + std::to_string(j) + " is not present in the low-fidelity designs");
        if (used[static_cast<std::size_t>(match)])
            throw DataError("linked design column " + std::to_string(j) + " repeats low-fidelity column " +
                            std::to_string(match));
        used[static_cast<std::size_t>(match)] = true;
        out.permutation.push_back(match);
    }
    std::vector<Index> rest;
    for (Index c = 0; c < m; ++c)
        if (!used[static_cast<std::size_t>(c)]) rest.push_back(c);

    std::vector<Index> linked_cols(out.permutation.begin(), out.permutation.end());
    out.linked = lo.snapshots.select(linked_cols);
    out.unlinked = lo.snapshots.select(rest);
    out.permutation.insert(out.permutation.end(), rest.begin(), rest.end());
    return out;
}

namespace {

using nlohmann::json;

template <class T>
T required(const json& j, const char* key, const std::filesystem::path& path) {
    if (!j.contains(key)) throw DataError("manifest " + path.string() + " is missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError("manifest " + path.string() + " field '" + key + "': " + e.what());
    }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    json j;
    try {
        j = json::parse(csv::read_text(manifest_path));
    } catch (const json::parse_error& e) {
        throw DataError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
    }
    const auto dir = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : dir / fp;
    };

    const auto designs_path = resolve(required<std::string>(j, "designs", manifest_path));
    const auto snaps_path = resolve(required<std::string>(j, "snapshots", manifest_path));
    const auto raw_bounds = required<std::vector<std::vector<double>>>(j, "bounds", manifest_path);
    std::vector<Bounds> bounds;
    for (const auto& b : raw_bounds) {
        if (b.size() != 2) throw DataError("manifest " + manifest_path.string() + ": each bound must be [lower, upper]");
        bounds.push_back({b[0], b[1]});
    }
    std::vector<std::string> names;
    if (j.contains("names")) names = required<std::vector<std::string>>(j, "names", manifest_path);
    std::vector<std::string> node_ids;
    if (j.contains("node_ids")) node_ids = required<std::vector<std::string>>(j, "node_ids", manifest_path);

    Eigen::MatrixXd design_values = csv::read_matrix(designs_path);
    Eigen::MatrixXd snap_values = csv::read_matrix(snaps_path);
    if (design_values.cols() != snap_values.cols())
        throw DataError("dimension mismatch: " + designs_path.string() + " has " + std::to_string(design_values.cols()) +
                        " columns but " + snaps_path.string() + " has " + std::to_string(snap_values.cols()));

    return Dataset(DesignMatrix(std::move(design_values), std::move(names), std::move(bounds)),
                   SnapshotMatrix(std::move(snap_values), j.value("field_name", std::string{}), std::move(node_ids)),
                   required<std::string>(j, "fidelity", manifest_path),
                   required<double>(j, "cost_per_sample", manifest_path));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path) {
    const auto dir = manifest_path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const std::string stem = manifest_path.stem().string();
    const std::string designs_name = stem + "_designs.csv";
    const std::string snaps_name = stem + "_snapshots.csv";
    csv::write_matrix(dir / designs_name, ds.designs.values());
    csv::write_matrix(dir / snaps_name, ds.snapshots.values());

    json bounds = json::array();
    for (const auto& b : ds.designs.bounds()) bounds.push_back({b.lower, b.upper});
    json j;
    j["designs"] = designs_name;
    j["snapshots"] = snaps_name;
    j["fidelity"] = ds.fidelity;
    j["cost_per_sample"] = ds.cost_per_sample;
    j["bounds"] = bounds;
    j["names"] = ds.designs.names();
    j["field_name"] = ds.snapshots.field_name();
    j["node_ids"] = ds.snapshots.node_ids();
    csv::write_text(manifest_path, j.dump(2) + "\n");
}

std::string content_hash(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    auto feed_matrix = [&](const Eigen::MatrixXd& m) {
        const std::int64_t shape[2] = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
        feed(shape, sizeof shape);
        feed(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    };
    feed_matrix(ds.designs.values());
    feed_matrix(ds.snapshots.values());
    feed(ds.fidelity.data(), ds.fidelity.size());
    for (const auto& b : ds.designs.bounds()) {
        feed(&b.lower, sizeof(double));
        feed(&b.upper, sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace marom
