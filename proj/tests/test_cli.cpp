#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "actev/cli.hpp"

using namespace actev;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("actev_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    nlohmann::json base_config() const {
        nlohmann::json j;
        j["law"] = {{"kind", "regularized_euler"}, {"m", 1.0}, {"M", 4.0},
                    {"a", 0.25},                   {"n", 40}};
        j["grid"] = {{"d", 2}, {"L", 2.0 * M_PI}, {"N", 16}};
        j["solver"] = {{"eps", 1e-3}, {"t_end", 0.2},          {"dt_init", 1e-3},
                       {"rtol", 1e-7}, {"atol", 1e-12},        {"safety_margin", 0.05},
                       {"snapshot_every", 0.1}};
        j["initial"] = {{"preset", "taylor_green"}, {"amplitude", 0.5}};
        j["output"] = {{"dir", (dir_ / "out").string()}};
        return j;
    }

    std::string write_config(const nlohmann::json& j, const std::string& name = "config.json") {
        const fs::path p = dir_ / name;
        std::ofstream out(p);
        out << j.dump(2) << "\n";
        return p.string();
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RunRejectsParameterConstraintViolation) {
    nlohmann::json j = base_config();
    j["law"]["m"] = 2.5;  // violates m < M - 2
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_run(write_config(j), "", log), cli::kExitConfig);
    EXPECT_NE(log.str().find("M - 2"), std::string::npos) << log.str();
}

TEST_F(CliTest, RunRejectsUnknownKeys) {
    nlohmann::json j = base_config();
    j["solver"]["mystery_knob"] = 3;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_run(write_config(j), "", log), cli::kExitConfig);
    EXPECT_NE(log.str().find("mystery_knob"), std::string::npos);
}

TEST_F(CliTest, RunRejectsSuperActivationInitialData) {
    nlohmann::json j = base_config();
    j["initial"]["amplitude"] = 1.1;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_run(write_config(j), "", log), cli::kExitConfig);
}

TEST_F(CliTest, SubActivationRunProducesInertStressColumnAndVerifies) {
    const std::string cfg = write_config(base_config());
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(cfg, "", log), cli::kExitOk) << log.str();

    const fs::path out = dir_ / "out";
    ASSERT_TRUE(fs::exists(out / "config.json"));
    ASSERT_TRUE(fs::exists(out / "diagnostics.csv"));
    ASSERT_TRUE(fs::exists(out / "status.json"));
    ASSERT_TRUE(fs::exists(out / "snapshots"));

    const auto recs = read_diagnostics_csv(out / "diagnostics.csv");
    ASSERT_GT(recs.size(), 2u);
    for (const auto& r : recs) EXPECT_EQ(r.dissipation_S, 0.0);

    std::ostringstream vlog;
    EXPECT_EQ(cli::cmd_verify(out.string(), vlog), cli::kExitOk) << vlog.str();
    EXPECT_NE(vlog.str().find("energy-budget residual"), std::string::npos);
}

TEST_F(CliTest, TamperedCsvFailsVerification) {
    const std::string cfg = write_config(base_config());
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(cfg, "", log), cli::kExitOk) << log.str();
    const fs::path out = dir_ / "out";

    // double every kinetic-energy entry
    auto recs = read_diagnostics_csv(out / "diagnostics.csv");
    {
        CsvWriter w(out / "diagnostics.csv");
        for (auto r : recs) {
            r.kinetic_energy *= 2.0;
            w.row(r);
        }
    }
    std::ostringstream vlog;
    EXPECT_EQ(cli::cmd_verify(out.string(), vlog), cli::kExitVerify) << vlog.str();
    EXPECT_NE(vlog.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyOnMissingRunIsAnInputError) {
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_verify((dir_ / "nope").string(), log), cli::kExitConfig);
}

TEST_F(CliTest, PropsIsDeterministicPerSeed) {
    std::ostringstream a, b, c;
    EXPECT_EQ(cli::cmd_props(42, 2000, "", a), cli::kExitOk);
    EXPECT_EQ(cli::cmd_props(42, 2000, "", b), cli::kExitOk);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(cli::cmd_props(43, 2000, "", c), cli::kExitOk);
    EXPECT_NE(a.str(), c.str());
    EXPECT_NE(a.str().find("min monotonicity gap"), std::string::npos);
}

TEST_F(CliTest, PropsWithZeroSamplesIsAVacuousPass) {
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_props(1, 0, "", log), cli::kExitOk);
    EXPECT_NE(log.str().find("warning"), std::string::npos);
    EXPECT_NE(log.str().find("vacuous"), std::string::npos);
}

TEST_F(CliTest, GronwallWithZeroScalePasses) {
    nlohmann::json j = base_config();
    j["solver"]["t_end"] = 0.1;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_gronwall(write_config(j), 0.0, (dir_ / "rep").string(), log),
              cli::kExitOk)
        << log.str();
    EXPECT_TRUE(fs::exists(dir_ / "rep" / "gronwall.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "rep" / "gronwall_report.json"));
}

TEST_F(CliTest, GronwallSmallPerturbationPasses) {
    nlohmann::json j = base_config();
    j["solver"]["t_end"] = 0.2;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_gronwall(write_config(j), 1e-6, "", log), cli::kExitOk) << log.str();
}

TEST_F(CliTest, RefineSingleLevelIsATrivialReport) {
    nlohmann::json j = base_config();
    j["solver"]["t_end"] = 0.1;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_refine(write_config(j), "40:1e-3", (dir_ / "ref").string(), log),
              cli::kExitOk)
        << log.str();
    EXPECT_TRUE(fs::exists(dir_ / "ref" / "refinement.csv"));
    std::ifstream jin(dir_ / "ref" / "refinement_report.json");
    const auto rep = nlohmann::json::parse(jin);
    EXPECT_TRUE(rep.at("distances").empty());
}

TEST_F(CliTest, RefineLadderReportsDistances) {
    nlohmann::json j = base_config();
    j["solver"]["t_end"] = 0.2;
    j["initial"] = {{"preset", "random_band"}, {"amplitude", 0.5}, {"seed", 7},
                    {"band", {1.0, 3.0}}};
    std::ostringstream log;
    EXPECT_EQ(
        cli::cmd_refine(write_config(j), "20:2e-3,40:1e-3", (dir_ / "ref").string(), log),
        cli::kExitOk)
        << log.str();
    std::ifstream jin(dir_ / "ref" / "refinement_report.json");
    const auto rep = nlohmann::json::parse(jin);
    ASSERT_EQ(rep.at("distances").size(), 1u);
    EXPECT_GT(rep.at("distances")[0].get<double>(), 0.0);
}

TEST_F(CliTest, BadLadderSpecIsAConfigError) {
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_refine(write_config(base_config()), "nonsense", "", log),
              cli::kExitConfig);
}

TEST_F(CliTest, SweepRunsEveryLevelIntoItsOwnDirectory) {
    nlohmann::json j = base_config();
    j["solver"]["t_end"] = 0.1;
    std::ostringstream log;
    EXPECT_EQ(cli::cmd_sweep(write_config(j), "20:2e-3,40:1e-3", (dir_ / "sweep").string(), log),
              cli::kExitOk)
        << log.str();
    for (int lvl : {0, 1}) {
        const fs::path d = dir_ / "sweep" / ("level_" + std::to_string(lvl));
        EXPECT_TRUE(fs::exists(d / "diagnostics.csv"));
        std::ostringstream vlog;
        EXPECT_EQ(cli::cmd_verify(d.string(), vlog), cli::kExitOk) << vlog.str();
    }
}

TEST_F(CliTest, FilePresetRoundTripsThroughSnapshots) {
    // first run writes snapshots; a second scenario restarts from one
    const std::string cfg = write_config(base_config());
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(cfg, "", log), cli::kExitOk) << log.str();

    nlohmann::json j = base_config();
    j["initial"] = {{"preset", "file"},
                    {"file", (dir_ / "out" / "snapshots" / "snap_000000").string()}};
    j["output"]["dir"] = (dir_ / "out2").string();
    std::ostringstream log2;
    ASSERT_EQ(cli::cmd_run(write_config(j, "config2.json"), "", log2), cli::kExitOk)
        << log2.str();
    const auto recs = read_diagnostics_csv(dir_ / "out2" / "diagnostics.csv");
    const auto orig = read_diagnostics_csv(dir_ / "out" / "diagnostics.csv");
    ASSERT_FALSE(recs.empty());
    EXPECT_NEAR(recs.front().kinetic_energy, orig.front().kinetic_energy,
                1e-12 * orig.front().kinetic_energy);
}

TEST(ShippedConfigs, AllParseAndValidate) {
    const fs::path dir = fs::path(ACTEV_SOURCE_DIR) / "configs";
    ASSERT_TRUE(fs::exists(dir));
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        ++count;
        EXPECT_NO_THROW({
            const ScenarioConfig sc = load_scenario(entry.path());
            auto basis = build_basis(sc.solver.grid, sc.solver.n);
            EXPECT_EQ(basis->n(), sc.solver.n);
        }) << entry.path();
    }
    EXPECT_GE(count, 4);
}

TEST_F(CliTest, ActivatedPipelineRunsAndVerifies) {
    // truncated activated scenario: strain crosses the threshold, the stress
    // column turns on, and the post-hoc bound replay still passes
    nlohmann::json j = base_config();
    j["law"]["n"] = 64;
    j["grid"]["N"] = 32;
    j["solver"]["t_end"] = 1.0;
    j["initial"] = {{"preset", "random_band"}, {"amplitude", 0.995}, {"seed", 11},
                    {"band", {1.0, 4.0}}};
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(write_config(j), "", log), cli::kExitOk) << log.str();
    const auto recs = read_diagnostics_csv(dir_ / "out" / "diagnostics.csv");
    double max_diss = 0.0;
    for (const auto& r : recs) max_diss = std::max(max_diss, r.dissipation_S);
    EXPECT_GT(max_diss, 0.0);
    std::ostringstream vlog;
    EXPECT_EQ(cli::cmd_verify((dir_ / "out").string(), vlog), cli::kExitOk) << vlog.str();
}

TEST_F(CliTest, StronglyDissipatingRunStillVerifiesFromTheCsvAlone) {
    // Newtonian-below-activation law: a large energy fraction flows through
    // the stress pairing, so the replay must separate sampling-quadrature
    // error from genuine budget violations
    nlohmann::json j = base_config();
    j["law"] = {{"kind", "activated_navier_stokes"}, {"m", 1.0}, {"M", 4.0}, {"a", 0.25},
                {"nu", 0.05}, {"nu_tilde", 0.05},    {"r", 3.0}, {"n", 40}};
    j["solver"]["t_end"] = 1.0;
    j["initial"] = {{"preset", "random_band"}, {"amplitude", 0.6}, {"seed", 13},
                    {"band", {1.0, 4.0}}};
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(write_config(j), "", log), cli::kExitOk) << log.str();
    const auto recs = read_diagnostics_csv(dir_ / "out" / "diagnostics.csv");
    double max_diss = 0.0;
    for (const auto& r : recs) max_diss = std::max(max_diss, r.dissipation_S);
    ASSERT_GT(max_diss, 0.0);
    std::ostringstream vlog;
    EXPECT_EQ(cli::cmd_verify((dir_ / "out").string(), vlog), cli::kExitOk) << vlog.str();
}

TEST_F(CliTest, RunByteIdenticalAcrossInvocations) {
    nlohmann::json j = base_config();
    j["initial"] = {{"preset", "random_band"}, {"amplitude", 0.7}, {"seed", 9},
                    {"band", {1.0, 3.0}}};
    const std::string cfg = write_config(j);
    std::ostringstream log;
    ASSERT_EQ(cli::cmd_run(cfg, (dir_ / "a").string(), log), cli::kExitOk) << log.str();
    ASSERT_EQ(cli::cmd_run(cfg, (dir_ / "b").string(), log), cli::kExitOk) << log.str();
    std::ifstream fa(dir_ / "a" / "diagnostics.csv"), fb(dir_ / "b" / "diagnostics.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_GT(sa.str().size(), 100u);
}
