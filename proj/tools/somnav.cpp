// Command-line front end: headless training and goal runs, the live TCP
// service, and memory-file import/export. All substance lives in the
// library headers; this file is flag plumbing and process wiring.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "somnav/engine.hpp"
#include "somnav/memory_io.hpp"
#include "somnav/server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

somnav::GridWorld load_world_file(const std::string& path, double max_range) {
    return somnav::load_world(read_file(path), max_range);
}

struct GridSize {
    int width = 8;
    int height = 8;
};

GridSize parse_grid(const std::string& text) {
    const auto x = text.find('x');
    GridSize g;
    try {
        std::size_t used_w = 0;
        std::size_t used_h = 0;
        if (x == std::string::npos) throw std::invalid_argument("no separator");
        g.width = std::stoi(text.substr(0, x), &used_w);
        g.height = std::stoi(text.substr(x + 1), &used_h);
        if (used_w != x || used_h != text.size() - x - 1) {
            throw std::invalid_argument("trailing characters");
        }
    } catch (const std::exception&) {
        throw CLI::ValidationError("--grid", "expected WxH, e.g. 8x8: got '" + text + "'");
    }
    if (g.width < 1 || g.height < 1) {
        throw CLI::ValidationError("--grid", "grid sides must be >= 1");
    }
    return g;
}

somnav::InputVector read_goal_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("goal file " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("observation") || !j["observation"].is_array()) {
        throw std::runtime_error("goal file " + path +
                                 ": expected {\"observation\": [..]}");
    }
    return somnav::InputVector(j["observation"].get<std::vector<double>>());
}

// shared option state; each subcommand registers the flags it honors
struct Options {
    std::string world;
    std::string memory;
    std::string goal;
    std::string script;
    std::uint64_t steps = 3000;
    std::uint64_t seed = 0;
    std::string grid = "8x8";
    std::string sensor = "ring16";
    double alpha_winner = 0.9;
    double alpha_neighbor = 0.4;
    double budget_factor = 1.0;
    double max_range = 8.0;
    std::uint64_t plastic_steps = 0;  // 0 = first half of --steps
    int min_edge_count = 1;
    int port = 7777;
    int tick_ms = 100;
};

somnav::SensorKind sensor_for_dim(int dim) {
    for (auto k : {somnav::SensorKind::ring16, somnav::SensorKind::image8x8}) {
        if (somnav::sensor_dim(k) == dim) return k;
    }
    throw std::runtime_error("memory file has dim " + std::to_string(dim) +
                             ", which matches no known sensor");
}

somnav::Engine fresh_engine(const Options& o) {
    somnav::GridWorld world = load_world_file(o.world, o.max_range);
    const somnav::SensorKind kind = somnav::parse_sensor_kind(o.sensor);
    const GridSize g = parse_grid(o.grid);
    somnav::SomConfig scfg;
    scfg.width = g.width;
    scfg.height = g.height;
    scfg.dim = somnav::sensor_dim(kind);
    scfg.alpha_winner = o.alpha_winner;
    scfg.alpha_neighbor = o.alpha_neighbor;
    scfg.seed = o.seed;
    somnav::AgentConfig acfg;
    acfg.budget_factor = o.budget_factor;
    acfg.exploration_seed = o.seed;
    // default split: first half plastic, second half chain-building
    acfg.plastic_steps = o.plastic_steps ? o.plastic_steps : o.steps / 2;
    acfg.min_edge_count = o.min_edge_count;
    somnav::CognitiveAgent agent(somnav::SomMap(scfg),
                                 somnav::TransitionModel(scfg.node_count(), o.min_edge_count),
                                 acfg);
    return somnav::Engine(std::move(world), kind, std::move(agent));
}

somnav::Engine engine_from_memory(const Options& o, bool budget_flag_given) {
    somnav::LoadedMemory mem = somnav::load_memory(o.memory, o.min_edge_count);
    somnav::GridWorld world = load_world_file(o.world, o.max_range);
    const somnav::SensorKind kind = sensor_for_dim(mem.som.config().dim);
    somnav::AgentConfig acfg;
    acfg.budget_factor = budget_flag_given ? o.budget_factor : mem.agent.budget_factor;
    acfg.exploration_seed = o.seed;
    acfg.plastic_steps = mem.agent.plastic_steps;
    acfg.min_edge_count = o.min_edge_count;
    somnav::CognitiveAgent agent(std::move(mem.som), std::move(mem.model), acfg,
                                 mem.agent.frozen);
    return somnav::Engine(std::move(world), kind, std::move(agent));
}

int cmd_train(const Options& o) {
    somnav::Engine engine = fresh_engine(o);
    const somnav::SomMap untrained = engine.agent().som();  // same seed, zero steps
    std::vector<somnav::InputVector> seen;
    seen.reserve(o.steps);
    nlohmann::json curve = nlohmann::json::array();
    const std::uint64_t interval = std::max<std::uint64_t>(1, o.steps / 10);
    std::uint64_t help_count = 0;
    for (std::uint64_t c = 0; c < o.steps; ++c) {
        const somnav::CycleRecord& rec = engine.run_cycle();
        seen.emplace_back(rec.observation);
        if (rec.decision.help) ++help_count;
        if ((c + 1) % interval == 0 || c + 1 == o.steps) {
            curve.push_back({{"cycle", c + 1},
                             {"qe", engine.agent().som().quantization_error(seen)}});
        }
    }
    const somnav::AgentSettings settings{
        o.budget_factor, o.plastic_steps ? o.plastic_steps : o.steps / 2,
        engine.agent().frozen()};
    somnav::save_memory(engine.agent().som(), engine.agent().model(), settings, o.memory);

    nlohmann::json report;
    report["type"] = "report";
    report["cycles"] = o.steps;
    report["nodes"] = engine.agent().som().config().node_count();
    if (!seen.empty()) {
        // both maps scored on the same sample: the honest before/after
        report["qe_initial"] = untrained.quantization_error(seen);
        report["qe_final"] = engine.agent().som().quantization_error(seen);
    }
    report["qe_curve"] = curve;
    report["transitions_recorded"] = engine.agent().model().total_recorded();
    report["help_requests"] = help_count;
    report["frozen"] = engine.agent().frozen();
    report["memory"] = o.memory;
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_run(const Options& o, bool budget_flag_given) {
    somnav::Engine engine = engine_from_memory(o, budget_flag_given);
    std::vector<somnav::ScriptEntry> script;
    if (!o.script.empty()) {
        script = somnav::parse_script(read_file(o.script));
    }
    if (!o.goal.empty()) {
        const std::uint64_t id = engine.snapshots().add(read_goal_file(o.goal));
        script.insert(script.begin(),
                      somnav::ScriptEntry{0, somnav::wire::SetGoal{0, id}});
    }
    const auto frames = somnav::run_scripted(engine, o.steps, script);
    std::uint64_t help_count = 0;
    for (const auto& f : frames) {
        if (std::holds_alternative<somnav::wire::HelpRequestMsg>(f)) ++help_count;
        std::cout << somnav::wire::encode(f);
    }

    const somnav::StateSnapshot st = engine.agent().current_state();
    nlohmann::json report;
    report["type"] = "report";
    report["cycles"] = engine.tick();
    report["mode"] = std::string(somnav::to_string(st.mode));
    report["reached"] = st.mode == somnav::AgentMode::idle;
    if (st.goal) {
        report["steps_taken"] = st.goal->steps_taken;
        if (st.goal->initial_estimate) {
            report["initial_estimate"] = *st.goal->initial_estimate;
        }
    }
    report["help_requests"] = help_count;
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_serve(const Options& o, bool budget_flag_given, bool memory_given) {
    somnav::Engine engine = memory_given ? engine_from_memory(o, budget_flag_given)
                                         : fresh_engine(o);
    somnav::Server server(engine, static_cast<std::uint16_t>(o.port),
                          std::chrono::milliseconds(o.tick_ms), /*start_paused=*/true);
    server.start();
    std::cout << "listening on " << server.port() << "\n" << std::flush;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
    return 0;
}

int cmd_export(const Options& o) {
    somnav::LoadedMemory mem = somnav::load_memory(o.memory);
    std::cout << somnav::encode_memory(mem.som, mem.model, mem.agent);
    return 0;
}

int cmd_import(const Options& o) {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    somnav::LoadedMemory mem = somnav::decode_memory(buf.str());
    somnav::save_memory(mem.som, mem.model, mem.agent, o.memory);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-world navigator with a self-organizing spatial memory"};
    app.require_subcommand(1);
    Options o;

    auto add_som_flags = [&](CLI::App* cmd) {
        cmd->add_option("--grid", o.grid, "map size as WxH")
            ->check([](const std::string& s) -> std::string {
                try {
                    parse_grid(s);
                } catch (const CLI::ValidationError& e) {
                    return e.what();
                }
                return {};
            })
            ->capture_default_str();
        cmd->add_option("--sensor", o.sensor, "observation encoding")
            ->check(CLI::IsMember({"ring16", "image8x8"}))
            ->capture_default_str();
        cmd->add_option("--alpha-winner", o.alpha_winner, "winner learning rate")
            ->capture_default_str();
        cmd->add_option("--alpha-neighbor", o.alpha_neighbor, "neighbor learning rate")
            ->capture_default_str();
    };
    auto add_agent_flags = [&](CLI::App* cmd) {
        cmd->add_option("--budget-factor", o.budget_factor,
                        "help when steps exceed factor * estimate")
            ->capture_default_str();
        cmd->add_option("--min-edge-count", o.min_edge_count,
                        "observations needed before an edge is plannable")
            ->capture_default_str();
        cmd->add_option("--seed", o.seed, "deterministic run seed")->capture_default_str();
        cmd->add_option("--max-range", o.max_range, "sensor saturation distance in cells")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };

    CLI::App* train = app.add_subcommand("train", "explore a world, save the memory");
    train->add_option("--world", o.world, "world file")->required();
    train->add_option("--memory", o.memory, "output memory file")->required();
    train->add_option("--steps", o.steps, "exploration cycles")->capture_default_str();
    train->add_option("--plastic-steps", o.plastic_steps,
                      "cycles before the map freezes (default: half of --steps)");
    add_som_flags(train);
    add_agent_flags(train);

    CLI::App* run = app.add_subcommand("run", "headless goal seeking from a saved memory");
    run->add_option("--world", o.world, "world file")->required();
    run->add_option("--memory", o.memory, "memory file to load")->required();
    run->add_option("--goal", o.goal, "goal snapshot file {\"observation\": [..]}");
    run->add_option("--script", o.script, "operator message script (NDJSON with at_cycle)");
    run->add_option("--steps", o.steps, "decision cycles")->capture_default_str();
    add_agent_flags(run);

    CLI::App* serve = app.add_subcommand("serve", "live service (starts paused; resume to go)");
    serve->add_option("--world", o.world, "world file")->required();
    serve->add_option("--memory", o.memory, "memory file to load (else fresh map)");
    serve->add_option("--port", o.port, "TCP port, 0 picks one")->capture_default_str();
    serve->add_option("--tick-ms", o.tick_ms, "decision cycle period")
        ->capture_default_str();
    serve->add_option("--steps", o.steps, "plastic-phase sizing for fresh maps")
        ->capture_default_str();
    add_som_flags(serve);
    add_agent_flags(serve);

    CLI::App* exp = app.add_subcommand("export", "print a memory file in canonical form");
    exp->add_option("--memory", o.memory, "memory file to read")->required();

    CLI::App* imp = app.add_subcommand("import", "read memory JSON from stdin, write file");
    imp->add_option("--memory", o.memory, "memory file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*train) return cmd_train(o);
        if (*run) return cmd_run(o, run->count("--budget-factor") > 0);
        if (*serve) {
            return cmd_serve(o, serve->count("--budget-factor") > 0,
                             serve->count("--memory") > 0);
        }
        if (*exp) return cmd_export(o);
        return cmd_import(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
