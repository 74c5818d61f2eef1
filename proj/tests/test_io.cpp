#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sogym/io.hpp"

using namespace sogym;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("sogym_test_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("problem round trip") {
    for (const BoundaryProblem& p : eval_set(kEvalSetSeed, 50)) {
        const BoundaryProblem q = problem_from_json(json::parse(problem_to_json(p).dump()));
        CHECK(encode_beta(q) == encode_beta(p));
        CHECK(q.seed == p.seed);
    }
    const json j = problem_to_json(BoundaryProblem{});
    CHECK(j.at("b_s") == "left");
    CHECK(j.at("b_l") == "right");
    CHECK(j.at("theta_l") == 270.0);
}

TEST_CASE("problem errors name the field") {
    json j = problem_to_json(BoundaryProblem{});
    auto message = [](const json& bad) {
        try {
            problem_from_json(bad);
        } catch (const std::invalid_argument& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    json missing = j;
    missing.erase("v_star");
    CHECK(message(missing).find("v_star") != std::string::npos);
    json wrong = j;
    wrong["b_l"] = "north";
    CHECK(message(wrong).find("b_l") != std::string::npos);
    json text = j;
    text["h"] = "tall";
    CHECK(message(text).find("'h'") != std::string::npos);
    json negative = j;
    negative["seed"] = -4;
    CHECK(message(negative).find("seed") != std::string::npos);
    json out_of_range = j;
    out_of_range["v_star"] = 0.9;
    CHECK_FALSE(message(out_of_range).empty());
    CHECK_THROWS_AS(problem_from_json(json::array()), std::invalid_argument);
}

TEST_CASE("actions") {
    const NormalizedAction a{0.1, -0.2, 0.3, -0.4, 0.5, -1.0};
    CHECK(action_from_json(action_to_json(a)) == a);
    CHECK_THROWS_AS(action_from_json(json::parse("[1,2,3]")), std::invalid_argument);
    CHECK_THROWS_AS(action_from_json(json::parse("[1,2,3,4,5,\"x\"]")), std::invalid_argument);
    CHECK_THROWS_AS(action_from_json(json::parse("{}")), std::invalid_argument);
}

TEST_CASE("records round trip through a json-lines file") {
    EpisodeRecord a;
    a.problem = sample(4);
    a.problem_id = "4";
    a.actions = {NormalizedAction{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
    a.compliance = 12.345678901234567;
    a.connected = true;
    a.volume = 0.31;
    a.reward = 0.123;
    EpisodeRecord b;
    b.problem = sample(5);
    b.problem_id = "five";
    b.failed = true;
    b.error = "boom";
    const auto path = scratch("records.jsonl");
    write_records(path, {a, b});
    const std::vector<EpisodeRecord> back = read_records(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].compliance == a.compliance);
    CHECK(back[0].actions == a.actions);
    CHECK(back[0].volume == a.volume);
    CHECK(back[0].reward == a.reward);
    CHECK(back[1].problem_id == "five");
    CHECK_FALSE(back[1].compliance.has_value());
    CHECK(back[1].failed);
    CHECK(back[1].error == "boom");
}

TEST_CASE("record invariants are enforced") {
    EpisodeRecord r;
    r.compliance = 3.0;
    r.connected = true;
    json j = record_to_json(r);
    j["connected"] = false;
    CHECK_THROWS_AS(record_from_json(j), std::invalid_argument);
    j.erase("connected");
    CHECK_THROWS_AS(record_from_json(j), std::invalid_argument);
}

TEST_CASE("json lines skip blanks and report the bad line") {
    const auto path = scratch("lines.jsonl");
    write_text(path, "{\"a\":1}\n\n  \n{\"a\":2}\n{oops\n");
    try {
        read_json_lines(path);
        FAIL("expected a parse error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(":5:") != std::string::npos);
    }
    write_text(path, "{\"a\":1}\n\n{\"a\":2}\n");
    CHECK(read_json_lines(path).size() == 2);
    CHECK_THROWS_AS(read_json_lines(scratch("absent.jsonl")), std::invalid_argument);
}

TEST_CASE("problem files") {
    json one = problem_to_json(sample(1));
    json two = problem_to_json(sample(2));
    two["id"] = "second";
    const auto arr = scratch("problems.json");
    write_json_file(arr, json::array({one, two}));
    const auto entries = read_problems(arr);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].id == problem_id(sample(1)));
    CHECK(entries[1].id == "second");

    const auto single = scratch("problem.json");
    write_json_file(single, one);
    CHECK(read_problems(single).size() == 1);

    const auto lines = scratch("problems.jsonl");
    write_json_lines(lines, {one, two});
    CHECK(read_problems(lines).size() == 2);
}

TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("observation json") {
    EnvConfig cfg;
    cfg.observation = ObservationMode::TopOptGame;
    Environment env(cfg);
    const json j = observation_to_json(env.reset(3));
    CHECK(j.at("beta").size() == 27);
    CHECK(j.at("design_variables").size() == 48);
    CHECK(j.at("design_image").at("shape") == json::array({3, 64, 64}));
    CHECK(j.at("design_image").at("data").size() == 3);
    CHECK(j.at("design_image").at("data")[0].size() == 64);
    CHECK(j.at("design_image").at("png").get<std::string>().rfind("iVBORw0KGgo", 0) == 0);
    CHECK(j.at("score") == 0.0);
    Environment plain;
    CHECK_FALSE(observation_to_json(plain.reset(3)).contains("design_image"));
}

TEST_CASE("density and metrics json") {
    const DensityField f = make_density_field(2, 1, {0.25, 1.0});
    const json d = density_to_json(f);
    CHECK(d.at("nx") == 2);
    CHECK(d.at("rho") == json::array({0.25, 1.0}));
    MetricsReport m;
    m.disconnection_rate = 25.0;
    const json mj = metrics_to_json(m);
    CHECK(mj.at("median_compliance_delta_pct").is_null());
    CHECK(mj.at("disconnection_rate_pct") == 25.0);
}
