#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fracvar/csv.hpp"
#include "fracvar/error.hpp"
#include "fracvar/problem_file.hpp"

using namespace fracvar;
namespace fs = std::filesystem;

namespace {

const std::string kData = FRACVAR_TEST_DATA;

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "fracvar_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = std::string(FRACVAR_CLI) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

std::map<std::string, std::string> report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) {
            kv[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    return kv;
}

const char* kMinimal = R"(
[interval]
a = 0
b = 1
[orders]
alpha = 0.5
beta = 0.5
gamma = 1
[objective.1]
lagrangian = v1^2
[boundary]
left = fixed:0
right = fixed:1
)";

}  // namespace

TEST_SUITE("cli") {
TEST_CASE("problem files") {
    const ProblemFile pf = parse_problem_file(kData + "/example2.prob");
    CHECK(pf.problem.n_objectives() == 2);
    CHECK(pf.problem.n_components() == 1);
    CHECK(pf.run.n == 512);
    CHECK(pf.run.weights == 11);
    CHECK(pf.run.window_lo == 0.1);
    CHECK(pf.problem.boundary[0].right.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
    CHECK(pf.output_path().ends_with("example2.csv"));

    const ProblemFile m = parse_problem_text(kMinimal);
    CHECK(m.run.window_lo == 0.0);
    CHECK(m.run.window_hi == 1.0);
    CHECK(m.problem.orders[0].gamma == 1.0);
}

TEST_CASE("problem file errors") {
    std::string text = kMinimal;
    SUBCASE("missing section") {
        const std::string block = "[interval]\na = 0\nb = 1\n";
        text.replace(text.find(block), block.size(), "");
        try {
            parse_problem_text(text);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("interval") != std::string::npos);
        }
    }
    SUBCASE("gamma outside [0, 1]") {
        text.replace(text.find("gamma = 1"), 9, "gamma = 1.5");
        try {
            parse_problem_text(text);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 8);
        }
    }
    SUBCASE("unknown key") {
        text += "[run]\nsmoothing = 3\n";
        CHECK_THROWS_AS(parse_problem_text(text), ParseError);
    }
    SUBCASE("non-constant number") {
        text += "[run]\nn = x\n";
        CHECK_THROWS_AS(parse_problem_text(text), ParseError);
    }
}

TEST_CASE("csv round trip") {
    CsvTable t;
    t.header = {"x", "y1"};
    t.columns = {{0.0, 0.1, 1.0 / 3.0}, {-2.5e-300, 1e300, 3.141592653589793}};
    const CsvTable back = parse_csv(to_csv(t));
    CHECK(back.header == t.header);
    CHECK(back.columns == t.columns);
    CHECK(back.find("y1") == 1);
    CHECK(back.find("v1") == -1);
    CHECK(format_number(0.0) == "0");
    CHECK_THROWS_AS(parse_csv("x,y1\n0,abc\n"), ParseError);
}

TEST_CASE("exit codes") {
    const std::string dir = scratch().string();
    CHECK(cli("deriv --expr 'x^2' --op caputo_l --n 64 --out " + dir + "/d.csv").code == 0);
    CHECK(cli("deriv --expr 'x^2' --op sideways").code == 2);
    CHECK(cli("deriv --expr 'x^2' --op combined --gamma 1.5").code == 3);
    CHECK(cli("deriv --expr 'y1 * x'").code == 2);
    CHECK(cli("solve " + kData + "/zero.prob --out " + dir + "/z.csv").code == 0);
    CHECK(cli("solve " + kData + "/infeasible.prob --out " + dir + "/i.csv").code == 4);
    CHECK(cli("solve " + dir + "/no_such.prob").code == 2);
    CHECK(cli("frobnicate").code == 2);

    std::ofstream(dir + "/bad.prob") << "[interval]\na = 0\n";
    CHECK(cli("solve " + dir + "/bad.prob").code == 2);
}

TEST_CASE("solve then verify") {
    const fs::path dir = scratch();
    std::string text = slurp(kData + "/quad_free.prob");
    text += "residual_tol = 1e-3\n";
    std::ofstream(dir / "qf.prob") << text;
    const std::string prob = (dir / "qf.prob").string();
    const std::string traj = (dir / "qf.csv").string();

    const Run s = cli("solve " + prob + " --out " + traj);
    REQUIRE(s.code == 0);
    const Run v = cli("verify " + prob + " --trajectory " + traj);
    CHECK(v.code == 0);
    const auto rs = report(s.out);
    const auto rv = report(v.out);
    CHECK(rv.at("verdict") == "pass");
    for (const char* key : {"el_residual_max", "transversality.1.residual"}) {
        CAPTURE(key);
        CHECK(rs.at(key) == rv.at(key));
    }

    CsvTable t = read_csv(traj);
    const auto mid = t.rows() / 2;
    t.columns[static_cast<std::size_t>(t.find("y1"))][mid] += 0.05;
    write_csv((dir / "bent.csv").string(), t);
    const Run bent = cli("verify " + prob + " --trajectory " + (dir / "bent.csv").string());
    CHECK(bent.code == 1);
    CHECK(report(bent.out).at("verdict") == "fail");
}

TEST_CASE("verify needs one multiplier per constraint") {
    const fs::path dir = scratch();
    const std::string traj = (dir / "ybar.csv").string();
    REQUIRE(cli("deriv --expr 'mlf(0.5, x^0.5)' --op combined --alpha 0.5 --beta 0.5 --gamma 1 --n 4096 --out " + traj)
                .code == 0);
    const std::string prob = kData + "/example1_iso.prob";
    CHECK(cli("verify " + prob + " --trajectory " + traj).code == 2);
    CHECK(cli("verify " + prob + " --trajectory " + traj + " --lambda 0.5,0.5").code == 2);
    const Run ok = cli("verify " + prob + " --trajectory " + traj + " --lambda 0.5");
    CHECK(ok.code == 0);
    CHECK(cli("verify " + prob + " --trajectory " + traj + " --lambda 2").code == 1);
}

TEST_CASE("reruns are byte identical") {
    const fs::path dir = scratch();
    const std::string prob = kData + "/example2.prob";
    for (const char* name : {"p1.csv", "p2.csv"}) {
        REQUIRE(cli("pareto " + prob + " --weights-count 3 --n 64 --out " + (dir / name).string()).code == 0);
    }
    CHECK(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
    CHECK(slurp(dir / "p1_w2.csv") == slurp(dir / "p2_w2.csv"));
    CHECK_FALSE(slurp(dir / "p1.csv").empty());
}
}
