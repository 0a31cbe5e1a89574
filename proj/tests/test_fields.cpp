#include "doctest.h"
#include "test_util.hpp"

#include "marom/bench.hpp"
#include "marom/csv.hpp"
#include "marom/error.hpp"
#include "marom/fields.hpp"

#include <algorithm>
#include <fstream>

using namespace marom;
using namespace marom::bench;

namespace {

DesignMatrix unit_designs(const Eigen::MatrixXd& v) {
    std::vector<std::string> names;
    for (Index i = 0; i < v.rows(); ++i) names.push_back("p" + std::to_string(i));
    return DesignMatrix(v, names, std::vector<Bounds>(static_cast<std::size_t>(v.rows()), Bounds{0.0, 1.0}));
}

void write(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

bool message_has(const Error& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("center two columns") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 3, 3, 5;
    auto c = center(x);
    CHECK(c.mean(0) == 2.0);
    CHECK(c.mean(1) == 4.0);
    Eigen::MatrixXd expect(2, 2);
    expect << -1, 1, -1, 1;
    CHECK(c.values == expect);
}

TEST_CASE("center single column is all zero") {
    Eigen::MatrixXd x(3, 1);
    x << 1.5, -2, 7;
    auto c = center(x);
    CHECK(c.mean == x.col(0));
    CHECK(c.values.isZero(0.0));
}

TEST_CASE("center beam dataset gives zero row means") {
    auto sd = generate_scenario(BeamProblem{}, Scenario::grid, FieldKind::displacement, 50, 50, 4, 1);
    auto c = center(sd.hi.snapshots);
    const double scale = c.values.cwiseAbs().maxCoeff() + 1.0;
    CHECK(c.values.rowwise().mean().cwiseAbs().maxCoeff() <= 1e-10 * scale);
    // adding the mean back reproduces the input to roundoff
    Eigen::MatrixXd back = c.values.colwise() + c.mean;
    const Eigen::MatrixXd& x = sd.hi.snapshots.values();
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-14 * x.cwiseAbs().maxCoeff());
}

TEST_CASE("center rejects an empty matrix") {
    CHECK_THROWS_AS(center(Eigen::MatrixXd(3, 0)), DataError);
}

TEST_CASE("design matrix validation") {
    Eigen::MatrixXd v(2, 2);
    v << 0.1, 0.2, 0.3, 1.5;
    CHECK_THROWS_AS(unit_designs(v), DataError);
    v(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(unit_designs(v), DataError);
    CHECK_THROWS_AS(unit_designs(Eigen::MatrixXd(2, 0)), DataError);
    v(1, 1) = 1.0;
    CHECK_THROWS_AS(DesignMatrix(v, {"a"}, {Bounds{}, Bounds{}}), DataError);
    CHECK_THROWS_AS(DesignMatrix(v, {"a", "b"}, {Bounds{1.0, 0.0}, Bounds{}}), DataError);
}

TEST_CASE("duplicate designs are detected within tolerance") {
    Eigen::MatrixXd v(2, 3);
    v << 0.1, 0.5, 0.1 + 1e-14, 0.2, 0.6, 0.2;
    auto d = unit_designs(v);
    auto dup = d.duplicate_pairs();
    REQUIRE(dup.size() == 1);
    CHECK(dup[0].first == 0);
    CHECK(dup[0].second == 2);
    CHECK_FALSE(d.same_point(d.point(0), d.point(1)));
}

TEST_CASE("snapshot matrix defaults node ids and rejects non-finite values") {
    SnapshotMatrix s(Eigen::MatrixXd::Zero(3, 2), "w");
    REQUIRE(s.node_ids().size() == 3);
    CHECK(s.node_ids()[2] == "2");
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(SnapshotMatrix(bad, "w"), DataError);
}

TEST_CASE("dataset rejects mismatched sample counts") {
    auto d = unit_designs(Eigen::MatrixXd::Constant(1, 10, 0.5));
    try {
        Dataset(d, SnapshotMatrix(Eigen::MatrixXd::Zero(4, 9), "w"), "hi", 1.0);
        FAIL("expected a dimension mismatch");
    } catch (const DataError& e) {
        CHECK(message_has(e, "10"));
        CHECK(message_has(e, "9"));
    }
}

namespace {

Dataset three_point_lo() {
    Eigen::MatrixXd p(1, 3);
    p << 0.1, 0.2, 0.3;
    Eigen::MatrixXd y(2, 3);
    y << 1, 2, 3, 10, 20, 30;
    return Dataset(unit_designs(p), SnapshotMatrix(y, "w"), "lo", 1.0);
}

}  // namespace

TEST_CASE("split_linked picks the linked column") {
    auto lo = three_point_lo();
    Eigen::MatrixXd l(1, 1);
    l << 0.2;
    auto split = split_linked(lo, unit_designs(l));
    REQUIRE(split.linked.samples() == 1);
    REQUIRE(split.unlinked.samples() == 2);
    CHECK(split.linked.values()(0, 0) == 2.0);
    CHECK(split.unlinked.values()(0, 0) == 1.0);
    CHECK(split.unlinked.values()(0, 1) == 3.0);
    CHECK(split.permutation == std::vector<Index>{1, 0, 2});
    CHECK(split.linked_count == 1);
}

TEST_CASE("split_linked with every design linked leaves nothing unlinked") {
    auto lo = three_point_lo();
    Eigen::MatrixXd l(1, 3);
    l << 0.3, 0.1, 0.2;
    auto split = split_linked(lo, unit_designs(l));
    CHECK(split.unlinked.samples() == 0);
    CHECK(split.linked.values()(1, 0) == 30.0);
    CHECK(split.permutation == std::vector<Index>{2, 0, 1});
}

TEST_CASE("split_linked keeps the column multiset") {
    auto sd = generate_scenario(BeamProblem{}, Scenario::grid, FieldKind::displacement, 6, 15, 9, 1);
    // shuffle lo so that linked columns are not the leading block
    std::vector<Index> order{14, 3, 0, 7, 1, 12, 5, 2, 9, 4, 13, 6, 11, 8, 10};
    auto lo = sd.lo.select(order);
    auto split = split_linked(lo, sd.hi.designs);
    auto perm = split.permutation;
    std::sort(perm.begin(), perm.end());
    for (Index i = 0; i < 15; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);
    for (Index j = 0; j < 6; ++j)
        CHECK(split.linked.values().col(j) == sd.lo.snapshots.values().col(j));
}

TEST_CASE("split_linked errors") {
    auto lo = three_point_lo();
    Eigen::MatrixXd l(1, 2);
    l << 0.2, 0.7;
    try {
        split_linked(lo, unit_designs(l));
        FAIL("expected missing-design error");
    } catch (const DataError& e) {
        CHECK(message_has(e, "column 1"));
    }

    Eigen::MatrixXd p(1, 3);
    p << 0.1, 0.2, 0.2;
    Dataset dup(unit_designs(p), lo.snapshots, "lo", 1.0);
    Eigen::MatrixXd one(1, 1);
    one << 0.2;
    CHECK_THROWS_AS(split_linked(dup, unit_designs(one)), DataError);
}

TEST_CASE("csv parse errors carry a location") {
    try {
        csv::parse_matrix("1,2\n3,NaN\n", "s.csv");
        FAIL("expected non-finite error");
    } catch (const DataError& e) {
        CHECK(message_has(e, "row 2"));
        CHECK(message_has(e, "column 2"));
    }
    CHECK_THROWS_AS(csv::parse_matrix("1,2\n3\n"), DataError);
    CHECK_THROWS_AS(csv::parse_matrix("1,,2\n"), DataError);
    CHECK_THROWS_AS(csv::parse_matrix("1,abc\n"), DataError);
    CHECK_THROWS_AS(csv::parse_matrix("1;2\n"), DataError);
    auto m = csv::parse_matrix("1.5,-2e-3\r\n3,4\n");
    CHECK(m.rows() == 2);
    CHECK(m(0, 1) == -2e-3);
}

TEST_CASE("load_dataset from a manifest") {
    auto dir = testutil::scratch_dir("fields_load");
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 10, 0.5);
    for (Index j = 0; j < 10; ++j) p(0, j) = 0.1 * static_cast<double>(j);
    csv::write_matrix(dir / "designs.csv", p);
    csv::write_matrix(dir / "snap.csv", testutil::random_matrix(201, 10, 3));
    write(dir / "m.json", R"({"designs":"designs.csv","snapshots":"snap.csv","fidelity":"hi","cost_per_sample":5.4402,
        "bounds":[[0,1],[0,1],[0,1],[0,1]],"names":["a","b","c","d"],"field_name":"w"})");
    auto ds = load_dataset(dir / "m.json");
    CHECK(ds.designs.params() == 4);
    CHECK(ds.snapshots.dofs() == 201);
    CHECK(ds.samples() == 10);
    CHECK(ds.cost_per_sample == 5.4402);
    CHECK(ds.designs.names()[3] == "d");

    csv::write_matrix(dir / "snap9.csv", testutil::random_matrix(201, 9, 3));
    write(dir / "m9.json", R"({"designs":"designs.csv","snapshots":"snap9.csv","fidelity":"hi","cost_per_sample":1,
        "bounds":[[0,1],[0,1],[0,1],[0,1]],"names":["a","b","c","d"],"field_name":"w"})");
    try {
        load_dataset(dir / "m9.json");
        FAIL("expected mismatch");
    } catch (const DataError& e) {
        CHECK(message_has(e, "10"));
        CHECK(message_has(e, "9"));
    }

    write(dir / "nan.csv", "1,2\nNaN,3\n");
    write(dir / "mn.json", R"({"designs":"designs.csv","snapshots":"nan.csv","fidelity":"hi","cost_per_sample":1,
        "bounds":[[0,1],[0,1],[0,1],[0,1]],"names":["a","b","c","d"],"field_name":"w"})");
    try {
        load_dataset(dir / "mn.json");
        FAIL("expected non-finite error");
    } catch (const DataError& e) {
        CHECK(message_has(e, "row 2"));
    }

    CHECK_THROWS_AS(load_dataset(dir / "absent.json"), DataError);
}

TEST_CASE("save_dataset round trip") {
    auto dir = testutil::scratch_dir("fields_roundtrip");
    auto sd = generate_scenario(BeamProblem{}, Scenario::topology, FieldKind::stress, 7, 12, 21, 1);
    // values with awkward binary expansions
    Eigen::MatrixXd y = sd.lo.snapshots.values() / 3.0 + testutil::random_matrix(151, 12, 8) * 1e-7;
    Dataset ds(sd.lo.designs, SnapshotMatrix(y, "stress", sd.lo.snapshots.node_ids()), "lo", 0.5998);
    save_dataset(ds, dir / "lo.json");
    auto back = load_dataset(dir / "lo.json");
    const double rel_d = (back.designs.values() - ds.designs.values()).cwiseAbs().maxCoeff();
    const double rel_y = ((back.snapshots.values() - y).cwiseAbs().array() / y.cwiseAbs().array().max(1e-300)).maxCoeff();
    CHECK(rel_d <= 1e-15 * ds.designs.values().cwiseAbs().maxCoeff());
    CHECK(rel_y <= 1e-15);
    CHECK(back.fidelity == "lo");
    CHECK(back.cost_per_sample == 0.5998);
    CHECK(back.snapshots.node_ids() == ds.snapshots.node_ids());
    CHECK(back.designs.bounds() == ds.designs.bounds());
    CHECK(content_hash(back) == content_hash(ds));
}

TEST_CASE("content hash changes with content") {
    auto lo = three_point_lo();
    Eigen::MatrixXd y = lo.snapshots.values();
    y(1, 2) += 1e-9;
    Dataset other(lo.designs, SnapshotMatrix(y, "w"), "lo", 1.0);
    CHECK(content_hash(lo) != content_hash(other));
    CHECK(content_hash(lo).size() == 16);
}
