#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "pvfreq/catalog.hpp"
#include "pvfreq/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace pvfreq;

namespace {

struct Run {
  int code;
  std::string output;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(PVFREQ_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::path(PVFREQ_TEST_TMP) / ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string out() const { return "--out " + dir_.string(); }
  fs::path path(const std::string& f) const { return dir_ / f; }
  fs::path write(const std::string& f, const Json& j) const {
    write_file(path(f), j.dump(2));
    return path(f);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, CatalogListsIdsAndExports) {
  const auto r = cli(out() + " catalog");
  EXPECT_EQ(r.code, 0);
  for (const auto& e : builtin_catalog()) {
    EXPECT_NE(r.output.find(e.id), std::string::npos) << e.id;
    EXPECT_TRUE(fs::exists(path(e.id + ".json"))) << e.id;
  }
}

TEST_F(Cli, RunWritesCsvAndMetrics) {
  const auto r = cli(out() + " run table1-4");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = Json::parse(read_file(path("table1-4.metrics.json")));
  EXPECT_TRUE(m["ufls_crossed"].get<bool>());
  const auto csv = parse_csv(read_file(path("table1-4.csv")));
  EXPECT_EQ(csv.header.front(), "t_s");
  EXPECT_EQ(csv.rows.size(), 6001u);
}

TEST_F(Cli, RunScenarioFileWithOverrides) {
  const auto f = write("s.json", scenario_to_json(catalog_scenario("rcc-closure")));
  const auto r = cli(out() + " --dt 0.02 run " + f.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(parse_csv(read_file(path("rcc-closure.csv"))).rows.size(), 501u);
}

TEST_F(Cli, MultiFarmRunReportsConflict) {
  auto s = catalog_scenario("multifarm-db");
  s.sim.t_end = 70.0;
  const auto f = write("mf.json", scenario_to_json(s));
  const auto r = cli(out() + " run " + f.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("conflict"), std::string::npos);
}

TEST_F(Cli, CharacterizeReportsSteadyPower) {
  const auto f = write("plant.json", io::to_json([] {
    PlantControllers c;
    c.inertia = catalog::reference_inertia();
    c.inertia->p_limit = 0.1;
    return catalog::reference_plant(c);
  }()));
  const auto r = cli(out() + " characterize " + f.string() + " --rocof 0.06");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = Json::parse(read_file(path("pv.characterization.json")));
  EXPECT_NEAR(j["p_ss_measured_pu"].get<double>(), 0.05, 0.05 * 0.01);
  EXPECT_EQ(j["h_ss_s"].get<double>(), 25.0);
}

TEST_F(Cli, CharacterizeStepResponse) {
  PlantControllers c;
  c.droop = catalog::reference_droop();
  c.droop->K_g = 20.0;
  c.droop->db_pu = 0.0;
  const auto f = write("droop.json", io::to_json(catalog::reference_plant(c)));
  const auto r = cli(out() + " characterize " + f.string() + " --step 0.002");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = Json::parse(read_file(path("pv.characterization.json")))["step_response"];
  EXPECT_NEAR(j["final_dp_pu"].get<double>(), 0.04, 0.04 * 0.005);
  for (const char* k : {"reaction_time", "rise_time", "settling_time", "overshoot", "settling_band"})
    EXPECT_TRUE(j.contains(k)) << k;
}

TEST_F(Cli, UnknownFlagPrintsUsage) {
  const auto r = cli("run table1-1 --bogus");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("Usage"), std::string::npos);
  EXPECT_EQ(cli("").code, 1);
}

TEST_F(Cli, InvalidScenarioNamesTheField) {
  auto j = scenario_to_json(catalog_scenario("table1-4"));
  j["grid"]["penetration"] = 1.2;
  const auto r = cli(out() + " run " + write("bad.json", j).string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("grid.penetration"), std::string::npos);
  EXPECT_EQ(cli(out() + " run /nonexistent.json").code, 1);
}

TEST_F(Cli, LenientAcceptsUnknownKeys) {
  auto j = scenario_to_json(catalog_scenario("rcc-closure"));
  j["extra"] = 1;
  const auto f = write("extra.json", j);
  EXPECT_EQ(cli(out() + " run " + f.string()).code, 1);
  const auto r = cli(out() + " --lenient run " + f.string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("extra"), std::string::npos);
}

TEST_F(Cli, NumericalAbortExitsTwo) {
  auto s = catalog_scenario("table1-4");
  s.grid.penetration = 0.999999;
  s.grid.D = 1.0;
  const auto r = cli(out() + " run " + write("stiff.json", scenario_to_json(s)).string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("area0.df"), std::string::npos);
}

TEST_F(Cli, CompareAndSweep) {
  const auto c = cli(out() + " compare table1-1 table1-4");
  ASSERT_EQ(c.code, 0) << c.output;
  const std::string table = read_file(path("compare.csv"));
  EXPECT_EQ(table.substr(0, table.find('\n')), "metric,table1-1,table1-4");

  const auto s = cli(out() + " --jobs 2 sweep rcc-sweep");
  ASSERT_EQ(s.code, 0) << s.output;
  const auto csv = read_file(path("rcc-sweep.sweep.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);

  // Parallel and serial sweeps agree byte for byte.
  const auto serial = cli("--jobs 1 sweep rcc-sweep");
  EXPECT_EQ(serial.output, csv);
}
