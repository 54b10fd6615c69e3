#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(LGQSMOOTH_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

json run_json(const std::string& args) {
    const auto r = run(args + " --json");
    REQUIRE(r.code == 0);
    const auto start = r.out.find("\n{");
    return json::parse(start == std::string::npos ? r.out : r.out.substr(start + 1));
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "lgqsmooth_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("steady on the preset") {
    const auto doc = run_json("steady --model opo");
    const auto vf = doc["filtered"]["value"];
    CHECK(vf[0][0].get<double>() == doctest::Approx(2.0136697460629254).epsilon(1e-8));
    CHECK(vf[1][1].get<double>() == doctest::Approx(0.2308497780526365).epsilon(1e-8));
    CHECK(doc["retrofiltered"]["value"][0][1].get<double>() == doctest::Approx(-1.806562964876377).epsilon(1e-8));
    CHECK(doc["residual"]["filtered"].get<double>() <= 1e-10);
    CHECK(doc["config"]["model_hash"].get<std::string>().size() == 16);

    const auto human = run("steady");
    CHECK(human.code == 0);
    CHECK(human.out.find("units of hbar/2") != std::string::npos);
    CHECK(human.out.find("4.0273") != std::string::npos);
}

TEST_CASE("steady on a damped toy without measurement gives the Lyapunov solution") {
    const auto path = scratch() / "toy.json";
    std::ofstream(path) << R"({"N": 1, "A": [[-1, 0.5], [-0.3, -2]], "D": [[1, 0.2], [0.2, 0.5]],
        "unravellings": {"dark": {"type": "explicit", "C": [[0, 0]], "Gamma": [[0, 0]]}}})";
    const auto doc = run_json("steady --model " + path.string() + " --unravelling dark");
    const auto v = doc["filtered"]["value"];
    CHECK(v[0][0].get<double>() == doctest::Approx(0.5174418604651163).epsilon(1e-8));
    CHECK(v[0][1].get<double>() == doctest::Approx(0.03488372093023258).epsilon(1e-6));
    CHECK(v[1][1].get<double>() == doctest::Approx(0.11976744186046512).epsilon(1e-8));
}

TEST_CASE("input errors exit with 1") {
    const auto bad = scratch() / "bad.json";
    std::ofstream(bad) << "{\"N\": 1, \"A\": [[0";
    CHECK(run("steady --model " + bad.string()).code == 1);
    CHECK(run("steady --model /nonexistent/model.json").code == 1);
    CHECK(run("steady --unravelling nobody").code == 1);
    CHECK(run("classify").code == 1);
    CHECK(run("classify --gamma 0.4").code == 1);
    CHECK(run("classify --gamma 0.4 --delta 0 --fixture a").code == 1);
    CHECK(run("classify --gamma -1 --delta 0").code == 1);
    CHECK(run("sweep --grid nonsense").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("").code == 1);
}

TEST_CASE("non-convergence exits with 2") {
    const auto path = scratch() / "unstable.json";
    std::ofstream(path) << R"({"N": 1, "A": [[1, 0], [0, 1]], "D": [[1, 0], [0, 1]],
        "unravellings": {"dark": {"type": "explicit", "C": [[0, 0]], "Gamma": [[0, 0]]}}})";
    CHECK(run("steady --model " + path.string() + " --unravelling dark --t-max 5").code == 2);
}

TEST_CASE("classify") {
    CHECK(run_json("classify --fixture a")["report"]["realizable"] == true);
    const auto b = run_json("classify --fixture b")["report"];
    CHECK(b["fits_filtered"] == true);
    CHECK(b["realizable"] == false);
    const auto c = run_json("classify --fixture c")["report"];
    CHECK(c["fits_unconditioned"] == true);
    CHECK(c["fits_filtered"] == false);
    CHECK(run_json("classify --fixture d")["report"]["fits_unconditioned"] == false);

    CHECK(run_json("classify --gamma 0.41 --delta 0")["report"]["realizable"] == true);
    CHECK(run_json("classify --gamma 0.9 --delta 0")["report"]["fits_unconditioned"] == false);

    const auto hom = run_json("classify --unobserved homodyne:-pi/8");
    CHECK(hom["report"]["extremal"] == true);
    CHECK(hom["params"]["gamma"].get<double>() == doctest::Approx(0.41).epsilon(0.02));

    const auto file = scratch() / "va.json";
    std::ofstream(file) << R"({"V": [[2.41, 0], [0, 0.41]], "units": "hbar/2"})";
    CHECK(run_json("classify --cov-file " + file.string())["report"]["realizable"] == true);

    const auto asym = scratch() / "asym.json";
    std::ofstream(asym) << "[[1.2, 0.1], [0.3, 0.2]]";
    CHECK(run_json("classify --cov-file " + asym.string())["report"]["is_symmetric"] == false);
}

TEST_CASE("smooth") {
    const auto a = run_json("smooth --fixture a");
    CHECK(a["sclass"] == true);
    CHECK(a["det_normalized"].get<double>() >= 1.0);
    const auto d = run_json("smooth --fixture d");
    CHECK(d["sclass"] == true);
    CHECK(d["input"]["fits_unconditioned"] == false);
    CHECK(d["fits_filtered"] == true);

    const auto vf = run_json("steady")["filtered"]["value"];
    const auto file = scratch() / "vf.json";
    std::ofstream(file) << json{{"V", vf}}.dump();
    CHECK(run("smooth --cov-file " + file.string()).code == 3);
}

TEST_CASE("sweep and boundary files") {
    const auto csv = scratch() / "sweep.csv";
    REQUIRE(run("sweep --grid 0.05:1.2:10,-0.9:0.9:7 --out " + csv.string()).code == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# {", 0) == 0);
    CHECK(line.find("model_hash") != std::string::npos);
    CHECK(line.find("0.05:1.2:10") != std::string::npos);
    std::getline(in, line);
    CHECK(line == "gamma,delta,pure,sclass,unc_fit,filt_fit,realizable,extremal,det_vs,singular");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 70);

    const auto bcsv = scratch() / "boundary.csv";
    REQUIRE(run("boundary --phases 8 --out " + bcsv.string()).code == 0);
    std::istringstream bin(slurp(bcsv));
    int brows = -2;
    while (std::getline(bin, line)) ++brows;
    CHECK(brows == 8);
}

TEST_CASE("fig2") {
    const auto csv = scratch() / "fig2.csv";
    const auto doc = run_json("fig2 --out " + csv.string());
    CHECK(doc["panels"]["a"]["fits_evolved"] == true);
    for (const char* p : {"b", "c", "d"}) CHECK(doc["panels"][p]["fits_evolved"] == false);
    const auto text = slurp(csv);
    for (const char* curve : {",initial,", ",translated,", ",evolved,", ",filtered,", ",unconditioned+,"}) {
        CHECK(text.find(curve) != std::string::npos);
    }

    const auto zero = scratch() / "fig2_zero.csv";
    const auto still = run_json("fig2 --duration 0 --fixtures a --out " + zero.string());
    CHECK(still["panels"]["a"]["min_eig"].get<double>() == 0.0);
}

TEST_CASE("simulate") {
    const auto dir = scratch() / "sim";
    fs::remove_all(dir);
    const auto args = "simulate --unobserved homodyne:-pi/8 --duration 5 --seed 7 --out ";
    const auto first = run_json(args + dir.string());
    const auto traj = slurp(dir / "trajectory_0.csv");
    const auto second = run_json(args + dir.string());
    CHECK(first["statistic"] == second["statistic"]);
    CHECK(traj == slurp(dir / "trajectory_0.csv"));
    CHECK(fs::exists(dir / "mixture.json"));

    const auto none = run_json("simulate --unobserved none --duration 10 --out " + (dir / "none").string());
    CHECK(none["relative_error"].get<double>() < 1e-12);
}
