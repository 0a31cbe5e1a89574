#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace marom {

using Index = Eigen::Index;

struct Bounds {
    double lower = 0.0;
    double upper = 1.0;
    double range() const { return upper - lower; }
    bool operator==(const Bounds&) const = default;
};

/// Relative tolerance, as a fraction of each parameter's bound range, under
/// which two design points are considered the same design.
inline constexpr double kDesignMatchTolerance = 1e-12;

/// b design parameters (rows) by n samples (columns), with per-parameter
/// labels and inclusive bounds.
///
/// Construction checks shape, finiteness and bounds. Distinctness of the
/// columns is not enforced here; consumers that need it (Kriging fits,
/// linking) check with duplicate_pairs().
class DesignMatrix {
public:
    DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names, std::vector<Bounds> bounds);

    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Bounds>& bounds() const { return bounds_; }

    Index params() const { return values_.rows(); }
    Index samples() const { return values_.cols(); }
    Eigen::VectorXd point(Index j) const { return values_.col(j); }

    /// True when a and b agree in every parameter to within the match tolerance.
    bool same_point(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) const;
    /// Every (i, j), i < j, of columns that coincide.
    std::vector<std::pair<Index, Index>> duplicate_pairs() const;

    /// Same names/bounds, columns picked (in order) by index.
    DesignMatrix select(const std::vector<Index>& columns) const;

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
    std::vector<Bounds> bounds_;
};

/// d field degrees of freedom (rows) by n samples (columns).
class SnapshotMatrix {
public:
    /// Empty node_ids are replaced by "0" .. "d-1".
    SnapshotMatrix(Eigen::MatrixXd values, std::string field_name, std::vector<std::string> node_ids = {});

    const Eigen::MatrixXd& values() const { return values_; }
    const std::string& field_name() const { return field_name_; }
    const std::vector<std::string>& node_ids() const { return node_ids_; }

    Index dofs() const { return values_.rows(); }
    Index samples() const { return values_.cols(); }

    SnapshotMatrix select(const std::vector<Index>& columns) const;

private:
    Eigen::MatrixXd values_;
    std::string field_name_;
    std::vector<std::string> node_ids_;
};

struct Dataset {
    Dataset(DesignMatrix designs, SnapshotMatrix snapshots, std::string fidelity, double cost_per_sample);

    DesignMatrix designs;
    SnapshotMatrix snapshots;
    std::string fidelity;
    double cost_per_sample;  // CPU-seconds per sample

    Index samples() const { return designs.samples(); }
    Dataset select(const std::vector<Index>& columns) const;
};

struct CenteredSnapshots {
    Eigen::MatrixXd values;
    Eigen::VectorXd mean;
};

CenteredSnapshots center(const SnapshotMatrix& snapshots);
CenteredSnapshots center(const Eigen::MatrixXd& snapshots);

/// Result of separating low-fidelity samples into those linked to a
/// high-fidelity design set and the rest.
struct LinkedSplit {
    SnapshotMatrix linked;    // columns ordered like the linked designs
    SnapshotMatrix unlinked;  // remaining columns, original order
    /// Source column indices: linked order first, then unlinked.
    std::vector<Index> permutation;
    Index linked_count = 0;
};

LinkedSplit split_linked(const Dataset& lo, const DesignMatrix& linked_designs);

/// Manifest + CSV persistence. Relative paths inside a manifest resolve
/// against the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);
/// Writes <manifest stem>_designs.csv and <manifest stem>_snapshots.csv
/// alongside the manifest.
void save_dataset(const Dataset& ds, const std::filesystem::path& manifest_path);

/// FNV-1a over the numeric content and labels; detects stale model/data pairs.
std::string content_hash(const Dataset& ds);

}  // namespace marom
