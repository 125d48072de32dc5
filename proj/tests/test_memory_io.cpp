#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "somnav/agent.hpp"
#include "somnav/memory_io.hpp"
#include "support/oracles.hpp"

using somnav::Action;
using somnav::AgentSettings;
using somnav::InputVector;
using somnav::LoadedMemory;
using somnav::NodeId;
using somnav::SomConfig;
using somnav::SomMap;
using somnav::TransitionModel;

namespace {

struct Fixture {
    SomMap som;
    TransitionModel model;
    AgentSettings agent;
};

Fixture random_state(oracle::TestRng& rng) {
    SomConfig cfg;
    cfg.width = 1 + rng.below(5);
    cfg.height = 1 + rng.below(5);
    cfg.dim = 1 + rng.below(4);
    cfg.alpha_winner = 0.1 + 0.85 * rng.unit();
    cfg.alpha_neighbor = cfg.alpha_winner * (0.05 + 0.95 * rng.unit());
    cfg.seed = rng.next();
    SomMap som(cfg);
    const int train = rng.below(20);
    for (int i = 0; i < train; ++i) {
        std::vector<double> v(static_cast<std::size_t>(cfg.dim));
        for (auto& x : v) x = rng.unit();
        som.train_step(InputVector(v));
    }

    TransitionModel model(cfg.node_count(), 1, som.version());
    const int edges = rng.below(30);
    for (int i = 0; i < edges; ++i) {
        model.record(rng.below(cfg.node_count()),
                     static_cast<Action>(rng.below(somnav::kActionCount)),
                     rng.below(cfg.node_count()), 1 + rng.below(50));
    }

    AgentSettings agent;
    agent.budget_factor = 1.0 + 3.0 * rng.unit();
    agent.plastic_steps = static_cast<std::uint64_t>(rng.below(5000));
    agent.frozen = rng.below(2) == 1;
    return {std::move(som), std::move(model), agent};
}

std::vector<std::tuple<NodeId, Action, NodeId, std::int64_t>> counts_of(
    const TransitionModel& m) {
    std::vector<std::tuple<NodeId, Action, NodeId, std::int64_t>> out;
    m.for_each_count([&](NodeId f, Action a, NodeId t, std::int64_t c) {
        out.emplace_back(f, a, t, c);
    });
    return out;
}

// a valid baseline document the corruption tests mutate
nlohmann::json baseline_doc() {
    oracle::TestRng rng(2024);
    Fixture f = random_state(rng);
    f.model.record(0, Action::forward, 0, 3);  // guarantee at least one entry
    return nlohmann::json::parse(encode_memory(f.som, f.model, f.agent));
}

std::string with(nlohmann::json j) { return j.dump(); }

}  // namespace

TEST_CASE("round-trip identity over random states") {
    oracle::TestRng rng(501);
    for (int iter = 0; iter < 120; ++iter) {
        Fixture f = random_state(rng);
        const std::string bytes = encode_memory(f.som, f.model, f.agent);

        LoadedMemory back = somnav::decode_memory(bytes);
        // bitwise equality of every numeric field
        CHECK(back.som.raw_weights() == f.som.raw_weights());
        CHECK(back.som.version() == f.som.version());
        CHECK(back.som.config().width == f.som.config().width);
        CHECK(back.som.config().height == f.som.config().height);
        CHECK(back.som.config().dim == f.som.config().dim);
        CHECK(back.som.config().seed == f.som.config().seed);
        CHECK(back.som.config().alpha_winner == f.som.config().alpha_winner);
        CHECK(back.som.config().alpha_neighbor == f.som.config().alpha_neighbor);
        CHECK(counts_of(back.model) == counts_of(f.model));
        CHECK(back.model.built_at_version() == f.som.version());
        CHECK(back.agent.budget_factor == f.agent.budget_factor);
        CHECK(back.agent.plastic_steps == f.agent.plastic_steps);
        CHECK(back.agent.frozen == f.agent.frozen);

        // canonical form is a fixed point
        CHECK(encode_memory(back.som, back.model, back.agent) == bytes);
    }
}

TEST_CASE("identical states encode to identical bytes") {
    oracle::TestRng a(7);
    oracle::TestRng b(7);
    Fixture f1 = random_state(a);
    Fixture f2 = random_state(b);
    CHECK(encode_memory(f1.som, f1.model, f1.agent) ==
          encode_memory(f2.som, f2.model, f2.agent));
}

TEST_CASE("file save and load round-trip") {
    oracle::TestRng rng(88);
    Fixture f = random_state(rng);
    const auto path = std::filesystem::temp_directory_path() / "somnav_io_test.somnav.json";
    somnav::save_memory(f.som, f.model, f.agent, path);
    LoadedMemory back = somnav::load_memory(path, 3);
    CHECK(back.som.raw_weights() == f.som.raw_weights());
    CHECK(back.model.min_edge_count() == 3);  // session knob, not file content
    std::filesystem::remove(path);
}

TEST_CASE("save validates before touching the sink") {
    SomConfig cfg;
    cfg.width = 2;
    cfg.height = 2;
    cfg.dim = 2;
    SomMap som(cfg);
    TransitionModel wrong_size(9);
    const auto path = std::filesystem::temp_directory_path() / "somnav_io_guard.somnav.json";
    {
        std::ofstream sentinel(path);
        sentinel << "sentinel";
    }
    CHECK_THROWS_AS(somnav::save_memory(som, wrong_size, {}, path), somnav::ValidationError);
    std::ifstream in(path);
    std::string content;
    std::getline(in, content);
    CHECK(content == "sentinel");
    std::filesystem::remove(path);
}

TEST_CASE("unreadable source reports a file error") {
    CHECK_THROWS_AS(somnav::load_memory("/nonexistent/dir/x.somnav.json"),
                    somnav::FileError);
}

TEST_CASE("syntactically broken inputs are parse errors") {
    const std::string good = baseline_doc().dump();
    CHECK_THROWS_AS(somnav::decode_memory(good.substr(0, good.size() / 2)),
                    somnav::ParseError);
    CHECK_THROWS_AS(somnav::decode_memory(""), somnav::ParseError);
    CHECK_THROWS_AS(somnav::decode_memory("not json"), somnav::ParseError);
}

TEST_CASE("unknown versions are rejected, never migrated") {
    auto j = baseline_doc();
    j["version"] = 2;
    CHECK_THROWS_AS(somnav::decode_memory(with(j)), somnav::VersionError);
    j["version"] = 0;
    CHECK_THROWS_AS(somnav::decode_memory(with(j)), somnav::VersionError);
    j["version"] = "1";  // wrong type, not a version mismatch
    CHECK_THROWS_AS(somnav::decode_memory(with(j)), somnav::ValidationError);
    j.erase("version");
    CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("version")));
}

TEST_CASE("invariant violations name the offending field") {
    SECTION("weight above range") {
        auto j = baseline_doc();
        j["som"]["weights"][0][1] = 1.5;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som.weights[0][1]")));
    }
    SECTION("weight below range") {
        auto j = baseline_doc();
        j["som"]["weights"][1][0] = -0.25;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som.weights[1][0]")));
    }
    SECTION("row count mismatch") {
        auto j = baseline_doc();
        j["som"]["weights"].erase(0);
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som.weights")));
    }
    SECTION("row width mismatch") {
        auto j = baseline_doc();
        j["som"]["weights"][2].push_back(0.5);
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som.weights[2]")));
    }
    SECTION("bad learning rates") {
        auto j = baseline_doc();
        j["som"]["alpha_winner"] = 0.0;
        CHECK_THROWS_AS(somnav::decode_memory(with(j)), somnav::ValidationError);
        j = baseline_doc();
        j["som"]["alpha_neighbor"] = 1.5;
        CHECK_THROWS_AS(somnav::decode_memory(with(j)), somnav::ValidationError);
    }
    SECTION("bad grid shape") {
        auto j = baseline_doc();
        j["som"]["width"] = 0;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som.width")));
    }
    SECTION("transition node out of range") {
        auto j = baseline_doc();
        const int n = j["som"]["width"].get<int>() * j["som"]["height"].get<int>();
        j["transitions"][0]["from"] = n;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("transitions[0].from")));
    }
    SECTION("unknown action symbol") {
        auto j = baseline_doc();
        j["transitions"][0]["action"] = "fly";
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("transitions[0].action")));
    }
    SECTION("nonpositive count") {
        auto j = baseline_doc();
        j["transitions"][0]["count"] = 0;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("transitions[0].count")));
    }
    SECTION("duplicate transition entry") {
        auto j = baseline_doc();
        j["transitions"].push_back(j["transitions"][0]);
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("duplicate")));
    }
    SECTION("budget factor below one") {
        auto j = baseline_doc();
        j["agent"]["budget_factor"] = 0.5;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("agent.budget_factor")));
    }
    SECTION("frozen flag with the wrong type") {
        auto j = baseline_doc();
        j["agent"]["frozen"] = 1;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("agent.frozen")));
    }
    SECTION("negative plastic_steps") {
        auto j = baseline_doc();
        j["agent"]["plastic_steps"] = -4;
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("agent.plastic_steps")));
    }
    SECTION("missing top-level object") {
        auto j = baseline_doc();
        j.erase("som");
        CHECK_THROWS_MATCHES(somnav::decode_memory(with(j)), somnav::ValidationError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("som")));
    }
}

TEST_CASE("unknown extra keys are tolerated") {
    auto j = baseline_doc();
    j["comment"] = "hand-annotated";
    CHECK_NOTHROW(somnav::decode_memory(with(j)));
}

TEST_CASE("a reloaded agent behaves like the original") {
    SomConfig cfg;
    cfg.width = 2;
    cfg.height = 2;
    cfg.dim = 2;
    SomMap som(cfg, {0, 0, 1, 0, 0, 1, 1, 1}, 4);
    TransitionModel model(4, 1, 4);
    model.record(0, Action::forward, 1);
    model.record(1, Action::spin_left, 2);
    AgentSettings settings;
    settings.budget_factor = 2.0;
    settings.frozen = true;

    const std::string bytes = encode_memory(som, model, settings);
    LoadedMemory back = somnav::decode_memory(bytes);

    somnav::AgentConfig acfg;
    acfg.budget_factor = settings.budget_factor;
    somnav::CognitiveAgent original(std::move(som), std::move(model), acfg, settings.frozen);
    somnav::CognitiveAgent restored(std::move(back.som), std::move(back.model), acfg,
                                    back.agent.frozen);

    const InputVector start({0, 0});
    const InputVector goal({0, 1});
    original.observe(start);
    restored.observe(start);
    CHECK(original.set_goal(goal).goal.goal_node == restored.set_goal(goal).goal.goal_node);
    const std::vector<InputVector> walk{start, InputVector({1, 0}), goal};
    for (const auto& obs : walk) {
        auto a = original.step(obs);
        auto b = restored.step(obs);
        CHECK(a.action == b.action);
        CHECK(a.source == b.source);
    }
}
