#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "superrad/cli_config.hpp"
#include "superrad/output.hpp"

using namespace superrad;
namespace fs = std::filesystem;

namespace {

std::vector<ConfigEntry> flags(std::initializer_list<std::pair<const char*, const char*>> kv) {
    std::vector<ConfigEntry> out;
    for (const auto& [k, v] : kv) out.push_back({k, v, 0});
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("superrad_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Invocation {
    int exit_code = -1;
    std::string out, err;
};

// Runs the built binary with stdout and stderr captured to files.
Invocation invoke(const std::string& args, const fs::path& dir) {
    const auto o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd =
        std::string("\"") + SUPERRAD_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
    const int status = std::system(cmd.c_str());
    Invocation r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

bool no_temp_files(const fs::path& dir) {
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().filename().string().find(".tmp.") != std::string::npos) return false;
    return true;
}

}  // namespace

TEST_CASE("config text parsing") {
    const auto e = read_config_text("# comment\n\ncommand = simulate\n n_samples=11 \nlambda-over-gamma0 = 2.5\n");
    REQUIRE(e.size() == 3);
    CHECK(e[0].key == "command");
    CHECK(e[0].value == "simulate");
    CHECK(e[0].line == 3);
    CHECK(e[1].key == "n-samples");
    CHECK(e[1].value == "11");
    CHECK(e[2].line == 5);
    CHECK_THROWS_AS(read_config_text("just words\n"), ConfigError);
}

TEST_CASE("defaults") {
    const auto c = build_config({}, flags({{"command", "simulate"}}));
    CHECK(c.command == Command::simulate);
    CHECK(c.params.n_atoms == 1);
    CHECK(c.params.gamma0 == 1e-3);
    CHECK(c.params.omega0 == 1.0);
    CHECK(c.grid.n_samples == 2001);
    CHECK_FALSE(c.grid.t_end.has_value());
    CHECK(c.output == "-");
    CHECK(c.effective_format() == OutputFormat::csv);
    CHECK(c.precision == Precision::extended);
    CHECK(c.degenerate == DegeneratePolicy::confluent);
    CHECK(c.memory_budget_bytes == kDefaultMemoryBudget);
    CHECK(build_config({}, flags({{"command", "eternal-nm"}})).effective_format() == OutputFormat::json);
    CHECK(build_config({}, flags({{"command", "critical-lambda"}})).effective_format() == OutputFormat::json);
    CHECK(build_config({}, flags({{"command", "critical-lambda"}, {"n-list", "2,3"}})).effective_format() ==
          OutputFormat::csv);
}

TEST_CASE("flags override the file") {
    const auto file = read_config_text("command = simulate\nn = 3\ngamma0 = 0.002\nlambda-over-gamma0 = 2\n");
    const auto c = build_config(file, flags({{"n", "5"}}));
    CHECK(c.params.n_atoms == 5);
    CHECK(c.params.gamma0 == 0.002);
    CHECK(c.params.lambda == doctest::Approx(0.004));
    // An absolute lambda in a later layer replaces the ratio.
    const auto d = build_config(file, flags({{"lambda", "0.01"}}));
    CHECK(d.params.lambda == doctest::Approx(0.01));
    // The ratio is applied to the final gamma0.
    const auto g = build_config(file, flags({{"gamma0", "0.004"}}));
    CHECK(g.params.lambda == doctest::Approx(0.008));
    CHECK_THROWS_AS(build_config({}, flags({{"command", "simulate"}, {"lambda", "0.1"}, {"lambda-over-gamma0", "1"}})),
                    ConfigError);
}

TEST_CASE("lists and enumerations") {
    const auto c = build_config({}, flags({{"command", "sweep"},
                                           {"n-list", "2, 3,8"},
                                           {"lambda-list", "0.5,1,5"},
                                           {"engine", "reduced"},
                                           {"precision", "quad"},
                                           {"rates", "noncanonical"},
                                           {"exponent-source", "cascade"},
                                           {"stop-at-horizon", "false"},
                                           {"memory-budget-gib", "0.5"}}));
    CHECK(c.n_list == std::vector<int>{2, 3, 8});
    CHECK(c.lambda_list == std::vector<double>{0.5, 1.0, 5.0});
    CHECK(c.engine == Engine::reduced);
    CHECK(c.precision == Precision::quad);
    CHECK(c.rates == RateKind::noncanonical);
    CHECK(c.exponent_source == ExponentSource::markovian_cascade);
    CHECK_FALSE(c.stop_at_horizon);
    CHECK(c.memory_budget_bytes == std::size_t{1} << 29);
}

TEST_CASE("configuration errors") {
    try {
        build_config(read_config_text("command = simulate\nnope = 1\n"), {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "nope");
        CHECK(e.line() == 2);
    }
    try {
        build_config(read_config_text("command = simulate\n\nn = three\n"), {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "n");
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(build_config({}, flags({{"n", "3"}})), ConfigError);
    try {
        build_config({}, flags({{"command", "simulate"}, {"gamma0", "-1"}}));
        FAIL("expected ParamError");
    } catch (const ParamError& e) {
        CHECK(e.field() == "gamma0");
        CHECK(std::string(e.what()).find("gamma0 > 0") != std::string::npos);
    }
    CHECK_THROWS_AS(build_config({}, flags({{"command", "simulate"}, {"n", "0"}})), ParamError);
    CHECK_THROWS_AS(build_config({}, flags({{"command", "simulate"}, {"engine", "fast"}})), ConfigError);
}

TEST_CASE("command line parsing") {
    const char* argv[] = {"superrad", "analytic", "--n", "2", "--lambda-over-gamma0", "3", "--n", "1"};
    const auto p = parse_command_line(8, argv);
    REQUIRE(p.config.has_value());
    CHECK(p.config->command == Command::analytic);
    CHECK(p.config->params.n_atoms == 1);
    const char* ver[] = {"superrad", "--version"};
    const auto v = parse_command_line(2, ver);
    CHECK_FALSE(v.config.has_value());
    CHECK(v.message.find("0.1.0") != std::string::npos);
    const char* help[] = {"superrad", "--help"};
    CHECK(parse_command_line(2, help).message.find("--lambda-over-gamma0") != std::string::npos);
    const char* bad[] = {"superrad", "simulate", "--n"};
    CHECK_THROWS_AS(parse_command_line(3, bad), ConfigError);
    for (const auto& k : config_keys()) CHECK(k.find('_') == std::string::npos);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(INFINITY) == "inf");
    CHECK(format_number(-INFINITY) == "-inf");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int k = 0; k < 1000; ++k) {
        const double x = std::pow(10.0, u(rng)) * (k % 2 ? -1 : 1);
        CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
    }
    CsvTable t;
    t.comments = {"a: 1"};
    t.columns = {"x", "y"};
    t.add_row({1.5, -2.0});
    CHECK(render_csv(t) == "# a: 1\nx,y\n1.5,-2\n");
    const auto j = nlohmann::json::parse(render_json({{"a", 1.0}, {"b", 2LL}, {"c", true}, {"d", NAN}}));
    CHECK(j["a"] == 1.0);
    CHECK(j["b"] == 2);
    CHECK(j["c"] == true);
    CHECK(j["d"] == "nan");
}

TEST_CASE("artifacts are reproducible and written atomically") {
    TempDir dir;
    auto cfg = [&](const std::string& cmd, const fs::path& out, std::vector<ConfigEntry> extra) {
        extra.push_back({"command", cmd, 0});
        extra.push_back({"output", out.string(), 0});
        return build_config({}, extra);
    };
    const auto a = dir.path / "a.csv", b = dir.path / "b.csv";
    const auto sim = flags({{"n", "3"}, {"lambda-over-gamma0", "0.8"}, {"n-samples", "51"}});
    run(cfg("simulate", a, sim));
    run(cfg("simulate", b, sim));
    const auto sa = slurp(a);
    CHECK(sa == slurp(b));
    CHECK(no_temp_files(dir.path));
    for (const char* line : {"# superrad_version: 0.1.0\n", "# command: simulate\n", "# solver: pseudomode/dense\n",
                             "# n_atoms: 3\n", "# gamma0_omega0: 0.001\n", "# lambda_over_gamma0: 0.80000000000000004\n",
                             "# abs_tol:", "# rel_tol:", "\nt,intensity,excitation,regime_flag\n"})
        CHECK(sa.find(line) != std::string::npos);

    // Thread count does not change the bytes.
    const auto s1 = dir.path / "s1.csv", s2 = dir.path / "s2.csv";
    auto sw = flags({{"n-list", "2,3"}, {"lambda-list", "0.5,5"}});
    auto sw1 = sw, sw2 = sw;
    sw1.push_back({"threads", "1", 0});
    sw2.push_back({"threads", "3", 0});
    run(cfg("sweep", s1, sw1));
    run(cfg("sweep", s2, sw2));
    CHECK(slurp(s1) == slurp(s2));
    CHECK(slurp(s1).find("n,lambda_over_gamma0,regime,") != std::string::npos);

    const auto ej = dir.path / "e.json";
    run(cfg("eternal-nm", ej, flags({{"lambda-over-gamma0", "100"}})));
    const auto j = nlohmann::json::parse(slurp(ej));
    for (const char* k : {"superrad_version", "command", "solver", "n_atoms", "gamma0_omega0", "lambda_over_gamma0",
                          "abs_tol", "rel_tol"})
        CHECK(j.contains(k));
    CHECK(j["command"] == "eternal-nm");

    const auto cj = dir.path / "c.json";
    run(cfg("critical-lambda", cj, flags({{"n", "2"}})));
    const auto c = nlohmann::json::parse(slurp(cj));
    CHECK(c["lambda_crit_over_gamma0"].get<double>() == doctest::Approx(0.9024).epsilon(1e-3));

    CHECK_THROWS_AS(write_artifact((dir.path / "missing" / "x.csv").string(), "x"), Error);
    try {
        write_artifact((dir.path / "missing" / "x.csv").string(), "x");
    } catch (const Error& e) {
        CHECK(e.kind() == "io");
    }
    CHECK(no_temp_files(dir.path));
}

TEST_CASE("binary exit codes and error reports") {
    TempDir dir;
    auto r = invoke("--version", dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("0.1.0") != std::string::npos);

    r = invoke("analytic --n 1 --lambda-over-gamma0 5 --n-samples 5 --t-end 1000", dir.path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("t,intensity,excitation\n") != std::string::npos);

    r = invoke("simulate --n 2 --gamma0 -1", dir.path);
    CHECK(r.exit_code == 2);
    auto e = nlohmann::json::parse(r.err);
    CHECK(e["error"] == "invalid_parameter");
    CHECK(e["field"] == "gamma0");

    std::ofstream(dir.path / "bad.cfg") << "command = simulate\n# note\nn = x\n";
    r = invoke("--config \"" + (dir.path / "bad.cfg").string() + "\"", dir.path);
    CHECK(r.exit_code == 2);
    e = nlohmann::json::parse(r.err);
    CHECK(e["error"] == "config");
    CHECK(e["line"] == 3);

    r = invoke("frobnicate", dir.path);
    CHECK(r.exit_code == 2);
    r = invoke("simulate --n 1000 --lambda-over-gamma0 1 --memory-budget-gib 0.001", dir.path);
    CHECK(r.exit_code == 1);
    CHECK(nlohmann::json::parse(r.err)["error"] == "capacity");

    // Config file and flag together, output to a file.
    std::ofstream(dir.path / "ok.cfg") << "command = analytic\nn = 2\nlambda-over-gamma0 = 0.5\nn-samples = 3\n";
    const auto out = dir.path / "o.csv";
    r = invoke("--config \"" + (dir.path / "ok.cfg").string() + "\" --n-samples 4 --t-end 100 --output \"" +
                   out.string() + "\"",
               dir.path);
    CHECK(r.exit_code == 0);
    const auto text = slurp(out);
    int data_lines = 0;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);)
        if (!line.empty() && line[0] != '#') ++data_lines;
    CHECK(data_lines == 5);
}
