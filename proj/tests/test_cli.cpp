// Runs the command-line tool as a subprocess and checks exit codes and outputs.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("l1heat_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const
    {
        const std::string cmd =
            std::string(L1HEAT_CLI) + " " + args + " > " + (dir_ / "stdout").string() + " 2> " + (dir_ / "stderr").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const fs::path& p) const
    {
        std::ifstream f(dir_ / p, std::ios::binary);
        std::stringstream s;
        s << f.rdbuf();
        return s.str();
    }

    std::string out(const std::string& sub) const { return "--out " + (dir_ / sub).string(); }

    void write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir_ / name) << text;
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, MeshCheck)
{
    EXPECT_EQ(run("mesh-check --unit-square 4"), 0);
    EXPECT_NE(read("stdout").find("nonobtuse: yes"), std::string::npos);
    EXPECT_EQ(run("mesh-check --interval 7"), 0);
    write("obtuse.mesh", "# one flat triangle\nd 2 3 1\nv 0 0\nv 1 0\nv 0.5 0.1\ne 0 1 2\n");
    EXPECT_EQ(run("mesh-check " + (dir_ / "obtuse.mesh").string()), 1);
    write("bad.mesh", "d 2 3\nv 0 0\n");
    EXPECT_EQ(run("mesh-check " + (dir_ / "bad.mesh").string()), 2);
    EXPECT_EQ(run("mesh-check " + (dir_ / "missing.mesh").string()), 2);
    EXPECT_EQ(run("mesh-check"), 2);
}

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("solve --dim 3"), 2);
    EXPECT_EQ(run("solve --problem nosuch " + out("o")), 2);
    EXPECT_EQ(run("solve --cq -1 " + out("o")), 2);
    EXPECT_EQ(run("diagnose --k-lo 2 --k-hi 1 " + out("o")), 2);
    EXPECT_EQ(run("study --kind cauchy --q 2 " + out("o")), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, ZeroProblemGivesZeroColumns)
{
    ASSERT_EQ(run("solve --dim 2 --n 4 --nt 4 --problem zero " + out("o")), 0);
    std::istringstream csv(read("o/solve.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "step,t,l1,l2,h1_seminorm");
    int rows = 0;
    while (std::getline(csv, line)) {
        EXPECT_EQ(line.substr(line.find(',', line.find(',') + 1)), ",0,0,0") << line;
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical)
{
    const std::string args = "diagnose --dim 2 --n 8 --nt 64 --problem 'dirac(0.0625)' --trials 200 --seed 7 ";
    run(args + out("a"));
    run(args + out("b"));
    for (const char* f : {"monitor.csv", "diagnostics.csv"}) {
        const std::string a = read(fs::path("a") / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, read(fs::path("b") / f)) << f;
    }
    ASSERT_EQ(run("solve --dim 1 --n 8 --nt 16 --dump " + out("c")), 0);
    ASSERT_EQ(run("solve --dim 1 --n 8 --nt 16 --dump " + out("d")), 0);
    EXPECT_EQ(read("c/nodal.csv"), read("d/nodal.csv"));
    EXPECT_EQ(read("c/solve.csv"), read("d/solve.csv"));
}

TEST_F(Cli, CflViolationIsACheckFailure)
{
    // coarse mesh with tiny steps: h^2 = 1/16 far above min tau / (4 C_Q^2)
    EXPECT_EQ(run("solve --dim 1 --n 4 --nt 100 --t-final 0.001 " + out("o")), 1);
    EXPECT_NE(read("stderr").find("CFL"), std::string::npos);
    EXPECT_EQ(run("solve --dim 1 --n 4 --nt 100 --t-final 0.001 --cfl warn " + out("o")), 0);
}

TEST_F(Cli, DiagnoseSmoothProblemPasses)
{
    EXPECT_EQ(run("diagnose --dim 1 --n 16 --nt 64 --trials 200 " + out("o")), 0);
    EXPECT_NE(read("o/diagnostics.csv").find("monitor_pass,1"), std::string::npos);
}

TEST_F(Cli, InfsupAndStudy)
{
    EXPECT_EQ(run("infsup --n 4 8 --nt 1 4 --trials 200 " + out("o")), 0);
    EXPECT_EQ(read("o/infsup.csv").substr(0, 4), "dim,");
    EXPECT_EQ(run("infsup --n 4 --nt 2 --jump consistent " + out("o")), 0);
    EXPECT_EQ(run("infsup --n 4096 --nt 4096 " + out("o")), 2);
    EXPECT_EQ(run("study --kind convergence --problem sine --n 8 16 " + out("o")), 0);
    EXPECT_EQ(run("study --kind cauchy --problem dirac --n 8 16 32 " + out("o")), 0);
    EXPECT_NE(read("stdout").find("strictly decrease"), std::string::npos);
    EXPECT_EQ(run("study --kind cauchy --problem dirac --n 8 16 --nt 4 " + out("o")), 2);
}
