// Learning a place and finding the way back to it.
//
// A robot wanders a small room while its map is still plastic, then keeps
// roaming after the map freezes so the transition chain fills in. The learned
// memory is handed to a second robot dropped at the cell farthest from where
// the first one ended up, with that spot as its goal. The printed trace shows
// the planned route being executed step by step.

#include <cstdio>
#include <optional>

#include <somnav/agent.hpp>
#include <somnav/engine.hpp>
#include <somnav/grid_world.hpp>

namespace {

constexpr const char* kRoom =
    "##########\n"
    "##########\n"
    "##....####\n"
    "##.#..####\n"
    "##....####\n"
    "##S.######\n"
    "##########\n"
    "##########\n"
    "##########\n"
    "##########\n";

}  // namespace

int main() {
    using namespace somnav;

    GridWorld world = load_world(kRoom, /*max_range=*/4.0);

    SomConfig som_cfg;
    som_cfg.width = 16;
    som_cfg.height = 16;
    som_cfg.dim = sensor_dim(SensorKind::ring16);
    som_cfg.seed = 7;

    AgentConfig roam_cfg;
    roam_cfg.budget_factor = 2.0;
    roam_cfg.exploration_seed = 9;
    roam_cfg.plastic_steps = 2000;

    Engine scout(world, SensorKind::ring16,
                 CognitiveAgent(SomMap(som_cfg),
                                TransitionModel(som_cfg.node_count()), roam_cfg));

    // The map trains for the first 2000 cycles, freezes itself, and the next
    // 1000 cycles only record which node follows which under each action.
    for (int i = 0; i < 3000; ++i) {
        scout.run_cycle();
    }
    const Pose home = scout.pose();
    const InputVector home_view = sense(world, home, SensorKind::ring16);
    const NodeId home_node = scout.agent().som().activate(home_view);
    std::printf("after 3000 cycles the scout stands at (%d,%d) facing %c\n",
                home.row, home.col, heading_char(home.heading));
    std::printf("its memory holds %lld observed transitions\n",
                static_cast<long long>(scout.agent().model().total_recorded()));

    // Drop point: the free pose whose planned route back is longest.
    Pose start = home;
    int longest = -1;
    for (int r = 0; r < world.rows(); ++r) {
        for (int c = 0; c < world.cols(); ++c) {
            if (!world.free_cell(r, c)) continue;
            for (int h = 0; h < 4; ++h) {
                const Pose p{r, c, static_cast<Heading>(h)};
                const NodeId n =
                    scout.agent().som().activate(sense(world, p, SensorKind::ring16));
                const std::optional<Plan> route = scout.agent().model().plan(n, home_node);
                if (route && route->estimate > longest) {
                    longest = route->estimate;
                    start = p;
                }
            }
        }
    }

    // Same map and chain, fresh robot: memories transplant by value.
    AgentConfig return_cfg;
    return_cfg.budget_factor = 2.0;
    return_cfg.exploration_seed = 42;
    Engine courier(world, SensorKind::ring16,
                   CognitiveAgent(scout.agent().som(), scout.agent().model(),
                                  return_cfg, /*frozen=*/true));
    courier.set_pose(start);
    courier.agent().observe(sense(world, start, SensorKind::ring16));
    std::printf("courier dropped at (%d,%d) facing %c, %d planned steps from home\n\n",
                start.row, start.col, heading_char(start.heading), longest);

    const SetGoalResult goal = courier.agent().set_goal(home_view);
    if (goal.help) {
        std::printf("help requested: the learned chain has no route home\n");
        return 1;
    }

    for (int i = 0; i < 100; ++i) {
        const CycleRecord& rec = courier.run_cycle();
        const StateSnapshot st = courier.agent().current_state();
        std::printf("cycle %2llu: %-10s -> (%d,%d,%c) node %3d mode %s\n",
                    static_cast<unsigned long long>(rec.tick),
                    rec.decision.action ? to_string(*rec.decision.action).data() : "-",
                    rec.pose_after.row, rec.pose_after.col,
                    heading_char(rec.pose_after.heading), rec.node,
                    to_string(st.mode).data());
        if (st.mode == AgentMode::idle) {
            std::printf("\nhome in %d steps (first plan said %d); resting at (%d,%d,%c)\n",
                        st.goal->steps_taken, st.goal->initial_estimate.value_or(-1),
                        courier.pose().row, courier.pose().col,
                        heading_char(courier.pose().heading));
            return 0;
        }
        if (st.mode == AgentMode::awaiting_help) {
            std::printf("\ncourier gave up and asked for help\n");
            return 1;
        }
    }
    std::printf("\ncourier never arrived\n");
    return 1;
}
