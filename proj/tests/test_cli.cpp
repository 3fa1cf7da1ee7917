#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Outcome
{
    int code;
    std::string output; // stdout and stderr
};

Outcome invoke(const std::string& args, const std::string& env = "")
{
    const auto log = fs::temp_directory_path() / "bcd_cli_test_output.txt";
    const std::string cmd = env + " " + BCD_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::vector<std::string> read_lines(const fs::path& path)
{
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

// Drops the elapsed_s column (index 6), the only wall-clock field.
std::string numeric_columns(const std::string& line)
{
    std::stringstream ss(line);
    std::string cell, out;
    for (int col = 0; std::getline(ss, cell, ','); ++col) {
        if (col != 6) out += cell + ",";
    }
    return out;
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "bcd_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

const std::string lasso_example = "--problem lasso --synthetic n=200,d=100,sparsity=0.3,signal=5,noise=0.01 "
                                  "--lambda 0.1 --strategy b_max_r --epochs 30 --seed 42";

} // namespace

TEST(Cli, TraceHasOneRecordPerEpochPlusStart)
{
    const auto path = scratch("trace.csv");
    const auto res = invoke(lasso_example + " --trace " + path.string());
    ASSERT_EQ(res.code, 0) << res.output;
    const auto lines = read_lines(path);
    ASSERT_EQ(lines.size(), 32u); // header + 31 records
    EXPECT_EQ(lines[0], "t,epoch,F,gap,subopt,eta,elapsed_s,col_passes,gap_evals");
    EXPECT_EQ(lines[1].substr(0, 4), "0,0,");
    EXPECT_EQ(lines.back().substr(0, 8), "3000,30,");
    EXPECT_NE(res.output.find("F="), std::string::npos);
    EXPECT_NE(res.output.find("G="), std::string::npos);
    EXPECT_NE(res.output.find("time_s="), std::string::npos);
}

TEST(Cli, RepeatedRunsGiveIdenticalNumbers)
{
    const auto a = scratch("a.csv");
    const auto b = scratch("b.csv");
    ASSERT_EQ(invoke(lasso_example + " --trace " + a.string()).code, 0);
    ASSERT_EQ(invoke(lasso_example + " --trace " + b.string()).code, 0);
    const auto la = read_lines(a);
    const auto lb = read_lines(b);
    ASSERT_EQ(la.size(), lb.size());
    for (std::size_t k = 0; k < la.size(); ++k) EXPECT_EQ(numeric_columns(la[k]), numeric_columns(lb[k]));
}

TEST(Cli, GaussSouthwellOnLassoIsUsageError)
{
    const auto res = invoke("--problem lasso --synthetic n=30,d=10,signal=3 --lambda 0.1 --strategy gs");
    EXPECT_EQ(res.code, 2);
    EXPECT_NE(res.output.find("differentiable"), std::string::npos) << res.output;
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(invoke("--problem lasso --synthetic n=30,d=10,signal=3 --lambda 0.1 --bogus").code, 2);
    EXPECT_EQ(invoke("--problem lasso --data /nonexistent/file.svm --lambda 0.1").code, 2);
    EXPECT_EQ(invoke("--problem lasso --synthetic n=30,d=10,signal=3 --lambda 0").code, 2);
    EXPECT_EQ(invoke("--problem lasso --synthetic n=30,d=10,signal=3 --lambda 0.1 --epsilon 2").code, 2);
    EXPECT_EQ(invoke("--problem lasso --synthetic n=30,d=10,signal=3 --lambda 0.1 --bin-size 0").code, 2);
    EXPECT_EQ(invoke("--problem lasso --synthetic n=30,d=10,signal=30 --lambda 0.1").code, 2);
    EXPECT_EQ(invoke("--problem ridge_dual --synthetic n=30,d=10,signal=3 --lambda 0.1 --update lasso_prox").code,
              2);
    EXPECT_EQ(invoke("--problem lasso --lambda 0.1").code, 2);
}

TEST(Cli, NumericalFailureExitCode)
{
    const auto path = scratch("huge.svm");
    std::ofstream(path) << "1e200 1:1\n1e200 1:1\n";
    EXPECT_EQ(invoke("--problem lasso --data " + path.string() + " --lambda 1").code, 3);
}

TEST(Cli, ReadsLibsvmFiles)
{
    const auto path = scratch("tiny.svm");
    std::ofstream(path) << "1 1:0.5 2:1\n-1 1:-1 3:2\n1 2:0.3 3:-0.4\n-1 1:0.2\n";
    const auto res = invoke("--problem logistic_l1 --data " + path.string() + " --lambda 0.05 --epochs 5");
    EXPECT_EQ(res.code, 0) << res.output;
    EXPECT_NE(res.output.find("problem=logistic_l1"), std::string::npos);
}

TEST(Cli, TraceDirectoryFromEnvironment)
{
    const auto dir = scratch("env_dir");
    fs::create_directories(dir);
    fs::remove(dir / "ridge_dual_uniform_seed5.csv");
    const auto res = invoke("--problem ridge_dual --synthetic n=40,d=10,signal=3 --lambda 0.1 "
                            "--strategy uniform --epochs 3 --seed 5",
                            "BCD_TRACE_DIR=" + dir.string());
    ASSERT_EQ(res.code, 0) << res.output;
    EXPECT_EQ(read_lines(dir / "ridge_dual_uniform_seed5.csv").size(), 5u);
}

TEST(Cli, CompareSingleConfigAndUnreachedTargets)
{
    const auto out = scratch("compare.csv");
    const auto res = invoke("--problem lasso --synthetic n=100,d=50,sparsity=0.3,signal=5,noise=0.01 "
                            "--lambda 0.05 --epochs 0.5 compare --strategies uniform --out " + out.string());
    ASSERT_EQ(res.code, 0) << res.output;
    EXPECT_NE(res.output.find("uniform"), std::string::npos);
    EXPECT_NE(res.output.find("—"), std::string::npos) << res.output;
    const auto lines = read_lines(out);
    ASSERT_EQ(lines.size(), 5u); // header + four targets
    EXPECT_EQ(lines[0], "strategy,target,reached,epoch,elapsed_s");
    EXPECT_NE(lines[3].find(",no,"), std::string::npos);
}

TEST(Cli, CompareReportsPerStrategyFailures)
{
    const auto res = invoke("--problem lasso --synthetic n=100,d=50,sparsity=0.3,signal=5,noise=0.01 "
                            "--lambda 0.05 --epochs 2 compare --strategies max_r,gs");
    ASSERT_EQ(res.code, 0) << res.output;
    EXPECT_NE(res.output.find("FAILED"), std::string::npos) << res.output;
    EXPECT_NE(res.output.find("max_r"), std::string::npos);
}
