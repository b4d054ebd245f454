#include <doctest.h>

#include "pmufdl/grid.hpp"
#include "pmufdl/grid_io.hpp"
#include "support.hpp"

using namespace pmufdl;

namespace {

GridModel twoNode(Complex y, Complex s = {}) {
  std::vector<Node> nodes(2);
  nodes[0].id = 1;
  nodes[1].id = 2;
  Branch b;
  b.id = 1;
  b.from = 1;
  b.to = 2;
  b.series_impedance = Matrix3c::Identity() / y;
  b.shunt_from = b.shunt_to = Matrix3c::Identity() * s;
  return GridModel(nodes, {b}, {}, {}, 50.0, 1.0);
}

double maxAbs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two-node admittance is the textbook nodal matrix") {
  const Complex y(2.0, -3.0);
  const AdmittanceMatrix ym = buildAdmittance(twoNode(y));
  CHECK(ym.rows() == 6);
  for (int p = 0; p < 3; ++p) {
    CHECK(std::abs(ym(p, p) - y) < 1e-12);
    CHECK(std::abs(ym(p, 3 + p) + y) < 1e-12);
    CHECK(std::abs(ym(3 + p, 3 + p) - y) < 1e-12);
  }
  CHECK(maxAbs(ym.rowwise().sum()) < 1e-12);
}

TEST_CASE("line shunts break the zero row sum by the shunt") {
  const Complex y(2.0, -3.0);
  const Complex s(0.0, 0.01);
  const AdmittanceMatrix ym = buildAdmittance(twoNode(y, s));
  CHECK(std::abs(ym(0, 0) - (y + s)) < 1e-12);
  const Eigen::VectorXcd sums = ym.rowwise().sum();
  for (int r = 0; r < 6; ++r) CHECK(std::abs(sums(r) - s) < 1e-12);
}

TEST_CASE("singular series impedance is rejected with the branch id") {
  std::vector<Node> nodes(2);
  nodes[0].id = 1;
  nodes[1].id = 2;
  Branch b;
  b.id = 7;
  b.from = 1;
  b.to = 2;
  const GridModel g(nodes, {b}, {}, {}, 50.0, 1.0);
  CHECK_THROWS_WITH_AS(buildAdmittance(g), doctest::Contains("branch 7"), ModelError);
}

TEST_CASE("model validation") {
  std::vector<Node> nodes(3);
  for (int k = 0; k < 3; ++k) nodes[k].id = k + 1;
  Branch a;
  a.id = 1;
  a.from = 1;
  a.to = 2;
  a.series_impedance = Matrix3c::Identity();
  Branch b = a;
  b.id = 2;
  SUBCASE("parallel branches") {
    b.from = 2;
    b.to = 1;
    CHECK_THROWS_AS(GridModel(nodes, {a, b}, {}, {}, 50.0, 1.0), ModelError);
  }
  SUBCASE("self loop") {
    b.from = 3;
    b.to = 3;
    CHECK_THROWS_AS(GridModel(nodes, {a, b}, {}, {}, 50.0, 1.0), ModelError);
  }
  SUBCASE("too few branches") {
    CHECK_THROWS_AS(GridModel(nodes, {a}, {}, {}, 50.0, 1.0), ModelError);
  }
  SUBCASE("asymmetric impedance") {
    b.from = 2;
    b.to = 3;
    b.series_impedance(0, 1) = 0.5;
    CHECK_THROWS_AS(GridModel(nodes, {a, b}, {}, {}, 50.0, 1.0), ModelError);
  }
  SUBCASE("monitored fake node") {
    b.from = 2;
    b.to = 3;
    nodes[2].kind = NodeKind::kFake;
    nodes[2].monitored = true;
    CHECK_THROWS_AS(GridModel(nodes, {a, b}, {}, {}, 50.0, 1.0), ModelError);
  }
  SUBCASE("valid") {
    b.from = 2;
    b.to = 3;
    const GridModel g(nodes, {a, b}, {}, {}, 50.0, 1.0);
    int degree_sum = 0;
    for (const Node& n : g.nodes()) degree_sum += g.degree(n.id);
    CHECK(degree_sum == 2 * static_cast<int>(g.branchCount()));
  }
}

TEST_CASE("midpoint split halves the impedance and keeps the end shunts") {
  const GridModel g = twoNode(Complex(1.0, -2.0), Complex(0.0, 0.02));
  SplitResult split;
  const GridModel e = extendWithVirtualNode(g, 1, 0.5, &split);
  CHECK(e.nodeCount() == 3);
  CHECK(e.branchCount() == 2);
  CHECK(split.new_node == 3);
  CHECK(e.node(3).kind == NodeKind::kVirtual);
  CHECK_FALSE(e.node(3).monitored);
  const Branch& a = e.branch(split.first_segment);
  const Branch& b = e.branch(split.second_segment);
  CHECK(maxAbs(a.series_impedance - g.branch(1).series_impedance / 2.0) < 1e-12);
  CHECK(maxAbs(b.series_impedance - g.branch(1).series_impedance / 2.0) < 1e-12);
  CHECK(maxAbs(a.shunt_from - g.branch(1).shunt_from) < 1e-15);
  CHECK(maxAbs(a.shunt_to) == 0.0);
  CHECK(maxAbs(b.shunt_from) == 0.0);
  CHECK(maxAbs(b.shunt_to - g.branch(1).shunt_to) < 1e-15);
}

TEST_CASE("split segments recompose to the original impedance") {
  std::mt19937_64 rng(3);
  for (double p : {0.25, 0.1, 0.5, 0.9}) {
    const GridModel g = testing::makeGrid(testing::randomTree(6, rng), {});
    for (BranchId id : g.branchIds()) {
      SplitResult s;
      const GridModel e = splitBranch(g, id, p, NodeKind::kVirtual, &s);
      const Matrix3c sum =
          e.branch(s.first_segment).series_impedance + e.branch(s.second_segment).series_impedance;
      CHECK(maxAbs(sum - g.branch(id).series_impedance) <
            1e-12 * maxAbs(g.branch(id).series_impedance));
      CHECK(maxAbs(e.branch(s.first_segment).series_impedance -
                   p * g.branch(id).series_impedance) < 1e-12);
    }
  }
}

TEST_CASE("split errors") {
  const GridModel g = twoNode(Complex(1.0, 0.0));
  CHECK_THROWS_AS(extendWithVirtualNode(g, 9), ModelError);
  CHECK_THROWS_AS(splitBranch(g, 1, 0.0, NodeKind::kVirtual), ModelError);
  CHECK_THROWS_AS(splitBranch(g, 1, 1.0, NodeKind::kVirtual), ModelError);
  CHECK_THROWS_AS(extendWithVirtualNode(extendWithVirtualNode(g, 1), 2), ModelError);
}

TEST_CASE("fake nodes") {
  SUBCASE("single monitored line") {
    const GridModel g = twoNode(Complex(1.0, 0.0)).withMonitored({1, 2});
    const FakeExtendedGrid feg = addFakeNodes(g, {1});
    CHECK(feg.grid.nodeCount() == 3);
    CHECK(feg.grid.node(3).kind == NodeKind::kFake);
    CHECK(feg.registry.fake_to_branch.at(3) == 1);
  }
  SUBCASE("no monitored pair is a no-op") {
    const GridModel g = testing::makeGrid(testing::chain(3), {1, 3});
    const FakeExtendedGrid feg = addFakeNodes(g, {});
    CHECK(feg.grid.nodeCount() == 3);
    CHECK(feg.registry.fake_to_branch.empty());
  }
  SUBCASE("non-monitored endpoint is rejected") {
    const GridModel g = testing::makeGrid(testing::chain(3), {1, 3});
    CHECK_THROWS_AS(addFakeNodes(g, {1}), ModelError);
  }
}

TEST_CASE("admittance symmetry and zero row sums on random extended grids") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 9;
    GridModel g = testing::makeGrid(testing::randomTree(n, rng), {}, trial);
    g = extendWithVirtualNode(g, 1 + trial % (n - 1), 0.3);
    const AdmittanceMatrix y = buildAdmittance(g);
    CHECK(maxAbs(y - y.transpose()) < 1e-9 * maxAbs(y));
    std::vector<Branch> bare = g.branches();
    for (Branch& b : bare) b.shunt_from = b.shunt_to = Matrix3c::Zero();
    const GridModel series(g.nodes(), bare, {}, {}, 50.0, 1.0);
    const AdmittanceMatrix ys = buildNetworkAdmittance(series);
    CHECK(maxAbs(ys.rowwise().sum()) < 1e-9 * maxAbs(ys));
  }
}

TEST_CASE("benchmark admittance structure") {
  const GridModel g = loadGrid(testing::dataPath("benchmark17.json"));
  CHECK(g.nodeCount() == 17);
  CHECK(g.branchCount() == 16);
  const AdmittanceMatrix y = buildAdmittance(g);
  CHECK(y.rows() == 51);
  for (NodeId a = 1; a <= 17; ++a) {
    for (NodeId b = 1; b <= 17; ++b) {
      if (a == b) continue;
      const bool block = maxAbs(y.block<3, 3>(3 * (a - 1), 3 * (b - 1))) > 0.0;
      CHECK(block == (g.branchBetween(a, b) != 0));
    }
  }
  SUBCASE("extending line 4-5 changes only the blocks at 4, 5 and the new node") {
    const BranchId id = g.branchBetween(4, 5);
    SplitResult s;
    const GridModel e = extendWithVirtualNode(g, id, 0.5, &s);
    CHECK(e.nodeCount() == 18);
    CHECK(e.branchCount() == 17);
    const AdmittanceMatrix ye = buildAdmittance(e);
    for (NodeId a = 1; a <= 18; ++a) {
      for (NodeId b = 1; b <= 18; ++b) {
        const Matrix3c old = (a <= 17 && b <= 17) ? Matrix3c(y.block<3, 3>(3 * (a - 1), 3 * (b - 1)))
                                                  : Matrix3c::Zero();
        const bool changed = maxAbs(ye.block<3, 3>(3 * (a - 1), 3 * (b - 1)) - old) > 1e-12;
        const bool allowed = (a == 4 || a == 5 || a == 18) && (b == 4 || b == 5 || b == 18);
        if (!allowed) CHECK_FALSE(changed);
      }
    }
  }
}

TEST_CASE("grounding and source models") {
  SUBCASE("isolated source neutral blocks zero sequence") {
    Source s;
    s.impedance = Matrix3c::Identity() * Complex(0.1, 1.0);
    const Matrix3c y = sourceAdmittance(s);
    CHECK((y * Vector3c::Ones()).norm() < 1e-12);
    s.grounded_neutral = true;
    CHECK((sourceAdmittance(s) * Vector3c::Ones()).norm() > 0.1);
  }
  SUBCASE("grounding is zero-sequence only") {
    Grounding g;
    g.kind = GroundingKind::kSolid;
    g.z0 = Complex(1.0, 6.0);
    const Matrix3c y = groundingAdmittance(g, 2 * M_PI * 50);
    const Vector3c positive(1.0, std::polar(1.0, -2 * M_PI / 3), std::polar(1.0, 2 * M_PI / 3));
    CHECK((y * positive).norm() < 1e-12);
    CHECK(std::abs((y * Vector3c::Ones())(0) - 1.0 / g.z0) < 1e-12);
  }
  SUBCASE("delta load draws no zero-sequence current") {
    Matrix3c z = Matrix3c::Zero();
    z(0, 1) = z(1, 0) = z(0, 2) = z(2, 0) = z(1, 2) = z(2, 1) = Complex(100.0, 30.0);
    CHECK((deltaLoadAdmittance(z) * Vector3c::Ones()).norm() < 1e-12);
  }
  SUBCASE("tuned Petersen coil resonates with the line capacitance") {
    const GridModel g = loadGrid(testing::dataPath("benchmark17.json"));
    const double l = tunedPetersenInductance(g);
    const double c0 = zeroSequenceCapacitance(g);
    CHECK(3.0 * g.omega() * g.omega() * l * c0 == doctest::Approx(1.0));
  }
}
