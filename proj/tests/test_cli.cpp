#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "blowup/cli.hpp"
#include "blowup/config.hpp"

using namespace blowup;
namespace fs = std::filesystem;

namespace {

struct CaptureStdout {
    std::ostringstream buffer;
    std::streambuf* saved;
    CaptureStdout() : saved(std::cout.rdbuf(buffer.rdbuf())) {}
    ~CaptureStdout() { std::cout.rdbuf(saved); }
};

fs::path temp_root() {
    const fs::path dir = fs::temp_directory_path() / "blowup-cli-tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_cfg(const std::string& name, const std::string& body) {
    const fs::path p = temp_root() / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out = nullptr) {
    CaptureStdout cap;
    const int code = run_command(args);
    if (out) *out = cap.buffer.str();
    return code;
}

const std::string kExists =
    "n = 3\nh = \"0\"\nf = \"r^(-3)*s^3\"\ng = \"r^(-3)*s^3\"\n";
const std::string kPlane = "n = 2\nh = \"0\"\nf = \"s^3\"\n";

}  // namespace

TEST_CASE("config parsing accepts the documented grammar") {
    RunConfig cfg = parse_config_text(
        "# comment\n"
        "n = 3\n"
        "h = \"-1*log(r)\"  # trailing comment\n"
        "f = \"s^3\"\n"
        "r0 = 2\n"
        "s0 = 0.5\n"
        "quad_tol = 1e-9\n"
        "tol = 1e-8\n");
    CHECK(cfg.spec.n == 3);
    CHECK(cfg.spec.r0 == 2.0);
    CHECK(cfg.spec.s0 == 0.5);
    CHECK(cfg.tol == 1e-8);
    CHECK(cfg.spec.eval_h(std::exp(1.0)) == doctest::Approx(-1.0));

    // The resolved form parses back to the same configuration.
    RunConfig again = parse_config_text(cfg.resolved_text());
    CHECK(again.spec.n == cfg.spec.n);
    CHECK(again.tol == cfg.tol);
    CHECK(again.spec.eval_f(1.0, 2.0) == cfg.spec.eval_f(1.0, 2.0));
}

TEST_CASE("config parsing rejects malformed input") {
    CHECK_THROWS_AS(parse_config_text("n = 3\nh = \"0\"\nf = \"s\"\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n = 3\nh = \"0\"\n"), ConfigError);          // missing f
    CHECK_THROWS_AS(parse_config_text("n = 3\nh = 0\nf = \"s\"\n"), ConfigError);   // unquoted expr
    CHECK_THROWS_AS(parse_config_text("n = x\nh = \"0\"\nf = \"s\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n = 3\nh = \"0\"\nf = \"s +\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n = 3\nh = \"0\"\nf = \"s\"\ntol = -1\n"), ConfigError);
}

TEST_CASE("exit codes cover the documented error paths") {
    const fs::path work = temp_root() / "codes";
    fs::create_directories(work);
    const auto prev = fs::current_path();
    fs::current_path(work);

    CHECK(run({"frobnicate"}) == 1);                       // usage
    CHECK(run({"check"}) == 1);                            // missing argument
    CHECK(run({"check", "/no/such/file.cfg"}) == 2);       // unreadable config
    const fs::path broken = write_cfg("broken.cfg", "n = 3\nh = \"0\"\nf = \"s +\"\n");
    CHECK(run({"check", broken.string()}) == 2);           // expression parse error
    const fs::path plane = write_cfg("plane.cfg", kPlane);
    CHECK(run({"check", plane.string()}) == 3);            // ruled out
    const fs::path good = write_cfg("good.cfg", kExists);
    CHECK(run({"transform", good.string(), "--r-grid", "1:10:5"}) == 0);
    CHECK(run({"transform", plane.string(), "--r-grid", "1:10:5"}) == 4);  // divergent weight
    CHECK(run({"report", (work / "runs" / "good-transform").string()}) == 0);
    CHECK(run({"report", "/no/such/dir"}) == 2);

    fs::current_path(prev);
}

TEST_CASE("transform command emits the documented CSV") {
    const fs::path work = temp_root() / "csv";
    fs::create_directories(work);
    const auto prev = fs::current_path();
    fs::current_path(work);

    const fs::path good = write_cfg("good.cfg", kExists);
    std::string stdout_text;
    REQUIRE(run({"transform", good.string(), "--r-grid", "1:2:5"}, &stdout_text) == 0);
    const fs::path dir = work / "runs" / "good-transform";
    CHECK(slurp(dir / "summary.json") == stdout_text);
    const std::string csv = slurp(dir / "transform.csv");
    CHECK(csv.rfind("r,t,p_prime\n", 0) == 0);
    CHECK(fs::exists(dir / "config.resolved.cfg"));

    fs::current_path(prev);
}

TEST_CASE("repeated runs are byte-identical") {
    const fs::path work = temp_root() / "determinism";
    fs::create_directories(work);
    const auto prev = fs::current_path();
    fs::current_path(work);

    const fs::path good = write_cfg("good.cfg", kExists);
    std::string first_out, second_out;
    REQUIRE(run({"transform", good.string(), "--r-grid", "1:100:33"}, &first_out) == 0);
    const fs::path dir = work / "runs" / "good-transform";
    const std::string csv1 = slurp(dir / "transform.csv");
    const std::string sum1 = slurp(dir / "summary.json");
    REQUIRE(run({"transform", good.string(), "--r-grid", "1:100:33"}, &second_out) == 0);
    CHECK(first_out == second_out);
    CHECK(slurp(dir / "transform.csv") == csv1);
    CHECK(slurp(dir / "summary.json") == sum1);

    fs::current_path(prev);
}
