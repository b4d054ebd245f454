#include <doctest.h>

#include <cmath>
#include <random>

#include "pmufdl/campaign.hpp"
#include "pmufdl/grid_io.hpp"
#include "support.hpp"

using namespace pmufdl;
using testing::chain;
using testing::makeGrid;

namespace {

const GridModel& bench() {
  static const GridModel g = loadGrid(testing::dataPath("benchmark17.json"));
  return g;
}

FaultScenario scenario(const std::string& line, double position, FaultType type) {
  const nlohmann::json j = {{"scenarios",
                             {{{"line", line}, {"position", position}, {"type", toString(type)}}}}};
  return parseScenarios(j, bench()).front();
}

double peak(const Vector3c& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two-node voltage divider") {
  const Complex zs(0.2, 1.5), zl(0.4, 0.7), zd(900.0, 300.0);
  std::vector<Node> nodes(2);
  nodes[0].id = 1;
  nodes[1].id = 2;
  Branch b;
  b.id = 1;
  b.from = 1;
  b.to = 2;
  b.series_impedance = Matrix3c::Identity() * zl;
  Source s;
  s.node = 1;
  s.grounded_neutral = true;
  s.impedance = Matrix3c::Identity() * zs;
  const double e = 11547.0;
  for (int p = 0; p < 3; ++p) s.emf(p) = std::polar(e, -2.0 * M_PI * p / 3.0);
  Load l;
  l.node = 2;
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) l.delta_impedance(p, q) = p == q ? Complex{} : zd;
  }
  const GridModel g(nodes, {b}, {s}, {l}, 50.0);
  const SteadyState st = solveSteadyState(g);
  // balanced delta load = wye of zd / 3 per phase
  const Complex zy = zd / 3.0;
  for (int p = 0; p < 3; ++p) {
    const Complex v2 = s.emf(p) * zy / (zs + zl + zy);
    const Complex v1 = s.emf(p) * (zl + zy) / (zs + zl + zy);
    CHECK(std::abs(st.voltages[1](p) - v2) < 1e-9 * e);
    CHECK(std::abs(st.voltages[0](p) - v1) < 1e-9 * e);
    const Complex i = s.emf(p) / (zs + zl + zy);
    CHECK(std::abs(st.injections[0](p) - i) < 1e-9 * std::abs(i));
    CHECK(std::abs(st.injections[1](p) + i) < 1e-9 * std::abs(i));
  }
}

TEST_CASE("bolted three-phase fault collapses the voltage") {
  const GridModel g = makeGrid(chain(4), {1, 2, 4});
  FaultScenario f;
  f.branch = 3;
  f.position = 1.0 - 1e-9;
  f.type = FaultType::kThreePhase;
  f.resistance = 1e-6;
  const SteadyState st = solveSteadyState(g, f);
  CHECK(peak(st.voltages[3]) < 1e-3 * g.nominalVoltage());
  CHECK(st.kcl_residual < 1e-9);
}

TEST_CASE("steady state satisfies KCL") {
  const GridModel& g = bench();
  CHECK(solveSteadyState(g).kcl_residual < 1e-9);
  for (FaultType t : {FaultType::kThreePhase, FaultType::kTwoPhase, FaultType::kOnePhaseGround,
                      FaultType::kOnePhasePetersen}) {
    const SteadyState st = solveSteadyState(g, scenario("9-10", 0.5, t));
    CHECK(st.kcl_residual < 1e-9);
  }
}

TEST_CASE("compensated earth fault current") {
  const GridModel& g = bench();
  const SteadyState solid = solveSteadyState(g, scenario("9-10", 0.5, FaultType::kOnePhaseGround));
  const SteadyState coil = solveSteadyState(g, scenario("9-10", 0.5, FaultType::kOnePhasePetersen));
  CHECK(peak(coil.fault_current) < peak(solid.fault_current));
  CHECK(std::abs(coil.fault_current(1)) == 0.0);
  CHECK(std::abs(coil.fault_current(2)) == 0.0);

  const GridModel plain = makeGrid(chain(3), {1, 3});
  FaultScenario f;
  f.branch = 1;
  f.type = FaultType::kOnePhasePetersen;
  CHECK_THROWS_AS(solveSteadyState(plain, f), ModelError);
}

TEST_CASE("fault current ordering") {
  const GridModel& g = bench();
  for (const std::string line : {"4-5", "9-10", "7-8", "13-14"}) {
    const double i3 = peak(solveSteadyState(g, scenario(line, 0.5, FaultType::kThreePhase)).fault_current);
    const double i2 = peak(solveSteadyState(g, scenario(line, 0.5, FaultType::kTwoPhase)).fault_current);
    const double ip =
        peak(solveSteadyState(g, scenario(line, 0.5, FaultType::kOnePhasePetersen)).fault_current);
    CHECK(i3 > i2);
    CHECK(i2 > ip);
  }
}

TEST_CASE("fake nodes are electrically transparent") {
  const GridModel& g = bench();
  const NodeSet mon = g.monitoredNodes();
  const FakeExtendedGrid feg = addFakeNodes(g, computeSingleLineUfcs(g, mon));
  REQUIRE(feg.grid.nodeCount() > g.nodeCount());
  const SteadyState a = solveSteadyState(g);
  const SteadyState b = solveSteadyState(feg.grid);
  double largest = 0.0;
  for (const Vector3c& i : a.injections) largest = std::max(largest, i.norm());
  for (std::size_t n = 0; n < g.nodeCount(); ++n) {
    CHECK((a.voltages[n] - b.voltages[n]).norm() <= 1e-9 * a.voltages[n].norm());
    CHECK((a.injections[n] - b.injections[n]).norm() <=
          1e-9 * std::max(a.injections[n].norm(), 1e-3 * largest));
  }
}

TEST_CASE("scenario validation") {
  const GridModel& g = bench();
  FaultScenario f = scenario("4-5", 0.5, FaultType::kThreePhase);
  f.position = 1.0;
  CHECK_THROWS_AS(solveSteadyState(g, f), ModelError);
  f.position = 0.5;
  f.resistance = 0.0;
  CHECK_THROWS_AS(solveSteadyState(g, f), ModelError);
  f.resistance = 100.0;
  f.branch = 999;
  CHECK_THROWS_AS(solveSteadyState(g, f), ModelError);
  CHECK((parseFaultType("1ph-p") == FaultType::kOnePhasePetersen));
  CHECK_THROWS_AS(parseFaultType("4-phase"), ModelError);
}

TEST_CASE("scenario files") {
  const GridModel& g = bench();
  const FaultScenario fwd = scenario("4-5", 0.25, FaultType::kThreePhase);
  const FaultScenario rev = scenario("5-4", 0.25, FaultType::kThreePhase);
  CHECK(fwd.branch == rev.branch);
  CHECK(fwd.position == doctest::Approx(1.0 - rev.position));
  CHECK(fwd.resistance == 100.0);
  CHECK(fwd.fault_time == 0.5);

  const auto all = loadScenarios(testing::dataPath("scenarios.json"), g);
  CHECK(all.size() == 9);

  const nlohmann::json bad = {{"scenarios",
                               {{{"line", "4-5"}, {"type", "3-phase"}},
                                {{"line", "4-9"}, {"type", "3-phase"}}}}};
  try {
    parseScenarios(bad, g);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("scenarios[1]") != std::string::npos);
  }
}

TEST_CASE("noise defaults") {
  const NoiseParams n;
  CHECK(n.voltage_magnitude == 1.6e-5);
  CHECK(n.current_magnitude == 4e-3);
  CHECK(n.voltage_phase == 5.1e-5);
  CHECK(n.current_phase == 5.8e-3);
  CHECK(n.sample_period == 0.02);
}

TEST_CASE("zero noise reproduces the truth") {
  const GridModel& g = bench();
  const SteadyState pre = solveSteadyState(g);
  const SteadyState post = solveSteadyState(g, scenario("4-5", 0.5, FaultType::kThreePhase));
  const MeasurementLayout layout(g.nodeCount(), g.monitoredNodes());
  const auto s = synthesizeMeasurements(pre, post, 0.5, layout, zeroNoise(), 0.0, 50, 1);
  for (const auto& smp : s) {
    const SteadyState& truth = smp.time >= 0.5 - 1e-9 ? post : pre;
    CHECK(smp.z == trueMeasurement(truth, layout));
  }
  CHECK(s[25].time == doctest::Approx(0.5));
  CHECK(s[25].z == trueMeasurement(post, layout));
}

TEST_CASE("polar noise statistics") {
  std::mt19937_64 rng(17);
  const std::size_t n = 10000;
  double sm = 0, sm2 = 0, sp = 0, sp2 = 0;
  const Complex unit = std::polar(1.0, 0.3);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex z = addPolarNoise(unit, 0.01, 0.02, rng);
    const double m = std::abs(z), a = std::arg(z);
    sm += m;
    sm2 += m * m;
    sp += a;
    sp2 += a * a;
  }
  const double dn = static_cast<double>(n);
  const double std_m = std::sqrt((sm2 - sm * sm / dn) / (dn - 1));
  const double std_p = std::sqrt((sp2 - sp * sp / dn) / (dn - 1));
  CHECK(std::abs(std_m / 0.01 - 1.0) < 0.05);
  CHECK(std::abs(std_p / 0.02 - 1.0) < 0.05);
  CHECK(std::abs(sm / dn - 1.0) < 1e-3);
}

TEST_CASE("synthesis is deterministic per seed") {
  const GridModel& g = bench();
  const SteadyState pre = solveSteadyState(g);
  const MeasurementLayout layout(g.nodeCount(), g.monitoredNodes());
  const NoiseParams noise;
  const auto a = synthesizeMeasurements(pre, std::nullopt, 0.5, layout, noise, 0.0, 5, 42);
  const auto b = synthesizeMeasurements(pre, std::nullopt, 0.5, layout, noise, 0.0, 5, 42);
  const auto c = synthesizeMeasurements(pre, std::nullopt, 0.5, layout, noise, 0.0, 5, 43);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].z == b[k].z);
    CHECK(a[k].z != c[k].z);
  }
  CHECK(deriveSeed(1, 2, 3) == deriveSeed(1, 2, 3));
  CHECK(deriveSeed(1, 2, 3) != deriveSeed(1, 3, 2));
}

TEST_CASE("campaign runs are independent of the thread schedule") {
  const GridModel& g = bench();
  const std::vector<FaultScenario> s{scenario("4-5", 0.5, FaultType::kThreePhase),
                                     scenario("9-10", 0.5, FaultType::kOnePhasePetersen)};
  CampaignOptions opt;
  opt.runs = 6;
  opt.base_seed = 99;
  const CampaignResult par = runCampaign(g, g.monitoredNodes(), s, opt);
  const CampaignResult ser = runCampaignSerial(g, g.monitoredNodes(), s, opt);
  const CampaignResult again = runCampaign(g, g.monitoredNodes(), s, opt);
  CHECK(campaignToJson(par, g) == campaignToJson(ser, g));
  CHECK(campaignToJson(par, g) == campaignToJson(again, g));
  for (const auto& r : par.scenarios) CHECK(r.dl + r.dnl + r.ndl + r.ndnl == 6);
}

TEST_CASE("noise-free campaign localizes every fault") {
  const GridModel& g = bench();
  CampaignOptions opt;
  opt.runs = 1;
  opt.noise = zeroNoise();
  opt.model_noise = zeroNoise();
  const auto scenarios = loadScenarios(testing::dataPath("scenarios.json"), g);
  const CampaignResult res = runCampaign(g, g.monitoredNodes(), scenarios, opt);
  for (const ScenarioResult& r : res.scenarios) {
    INFO(r.scenario.label);
    CHECK(r.dl == 1);
    CHECK(r.characterized == 1);
    CHECK(r.false_alarms == 0);
  }
}

TEST_SUITE("reference") {
  TEST_CASE("three-phase fault at the middle of line 4-5") {
    const GridModel& g = bench();
    CampaignOptions opt;
    opt.runs = 100;
    const CampaignResult res =
        runCampaign(g, g.monitoredNodes(), {scenario("4-5", 0.5, FaultType::kThreePhase)}, opt);
    const ScenarioResult& r = res.scenarios.front();
    const ClusterPartition part = computeClusters(g, g.monitoredNodes());
    CHECK(r.true_cluster == part.clusterOf(g.branchBetween(4, 5)));
    CHECK(r.dl == 100);
  }
}
