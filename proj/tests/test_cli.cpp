#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args)
{
    args.insert(args.begin(), "sbf");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = sbf::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

std::filesystem::path scratch_dir()
{
    const auto d = std::filesystem::temp_directory_path() / "sbf_cli_test";
    std::filesystem::create_directories(d);
    return d;
}

} // namespace

TEST(Cli, CoeffsCsv)
{
    const Outcome r = run({"coeffs", "--family", "green", "--beta", "3", "--n", "2", "--lmax", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(r.out), 52); // header plus l = 0..50
    EXPECT_EQ(r.out.rfind("l,coeff", 0), 0u);
    EXPECT_NE(r.out.find("\n1,0.29629629629629"), std::string::npos);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(run({"coeffs", "--bogus"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"coeffs", "--family", "nonsense"}).code, 2);
    const Outcome r = run({"rates", "--config", "/nonexistent/run.toml"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("config not found"), std::string::npos);
}

TEST(Cli, NumericalFailureExitsOne)
{
    // Forty centers cannot carry a positive rule of degree 30 without backoff.
    const Outcome r = run({"quadrature", "--gen", "fibonacci", "--N", "40", "--L", "30", "--threshold", "1000"});
    EXPECT_EQ(r.code, 1) << r.out << r.err;
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, QuadratureCertificate)
{
    const Outcome r = run({"quadrature", "--n", "1", "--gen", "equispaced", "--N", "16", "--L", "15"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = sbf::ojson::parse(r.out);
    EXPECT_LT(j["residual"].get<double>(), 1e-9);
}

TEST(Cli, QuadratureFromCentersFile)
{
    const auto dir = scratch_dir();
    const auto pts = dir / "fib.txt", w = dir / "w.csv";
    ASSERT_EQ(run({"centers", "--gen", "fibonacci", "--N", "200", "--out", pts.string()}).code, 0);
    const Outcome r = run({"quadrature", "--centers", pts.string(), "--degree", "8", "--out", w.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream is(w);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "index,weight\r");
    int rows = 0;
    for (std::string line; std::getline(is, line);)
        ++rows;
    EXPECT_EQ(rows, 200);
}

TEST(Cli, CertifyGatesFamily)
{
    EXPECT_EQ(run({"certify", "--family", "gaussian", "--sigma", "1"}).code, 0);
    EXPECT_EQ(run({"certify", "--kernel", "green"}).code, 2);
}

TEST(Cli, StabilityFilesAreReproducible)
{
    const auto dir = scratch_dir();
    const auto cfg = dir / "stab.toml";
    std::ofstream(cfg) << "[kernel]\nfamily = \"gaussian\"\nsigma = 2\n\nn = 2\nbase_N = 24\nlevels = 1\n";
    std::string text[2];
    for (int i = 0; i < 2; ++i) {
        const auto js = dir / ("stab" + std::to_string(i) + ".json");
        const Outcome r = run({"stability", "--config", cfg.string(), "--json", js.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        std::ifstream is(js);
        text[i].assign(std::istreambuf_iterator<char>(is), {});
    }
    EXPECT_FALSE(text[0].empty());
    EXPECT_EQ(text[0], text[1]);
}

TEST(Cli, FlagOverridesConfig)
{
    const auto dir = scratch_dir();
    const auto cfg = dir / "inv.toml";
    std::ofstream(cfg) << "levels = 4\n";
    const Outcome r = run({"inverse", "--config", cfg.string(), "--synthetic", "1", "2", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = sbf::ojson::parse(r.out);
    EXPECT_NEAR(j["mu_hat"].get<double>(), 1.0, 0.1);
}
