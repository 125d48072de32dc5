#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "somnav/action.hpp"
#include "somnav/som.hpp"
#include "somnav/transition_model.hpp"

namespace somnav {

enum class AgentMode { exploring, seeking, awaiting_help, overridden, idle };

inline constexpr std::string_view to_string(AgentMode m) {
    switch (m) {
        case AgentMode::exploring: return "exploring";
        case AgentMode::seeking: return "seeking";
        case AgentMode::awaiting_help: return "awaiting_help";
        case AgentMode::overridden: return "overridden";
        case AgentMode::idle: return "idle";
    }
    return "?";
}

enum class DecisionSource { autonomous, human };

inline constexpr std::string_view to_string(DecisionSource s) {
    return s == DecisionSource::human ? "human" : "autonomous";
}

enum class HelpReason { estimate_exceeded, no_path };

inline constexpr std::string_view to_string(HelpReason r) {
    return r == HelpReason::estimate_exceeded ? "estimate_exceeded" : "no_path";
}

struct HelpRequest {
    HelpReason reason;
    NodeId at_node;
    std::string detail;
};

/// A goal is a remembered observation; seeking means driving the current
/// activation onto its activation. The action estimate is frozen when the
/// goal is set and is what help-request budgeting measures against.
struct Goal {
    InputVector snapshot;
    NodeId goal_node = 0;
    std::optional<int> initial_estimate;
    int steps_taken = 0;
};

struct Decision {
    std::optional<Action> action;
    DecisionSource source = DecisionSource::autonomous;
    std::optional<Plan> plan_snapshot;
    std::optional<HelpRequest> help;
};

enum class ExplorationPolicy { uniform_random };
enum class GoalTolerance { node_equality };

struct AgentConfig {
    double budget_factor = 1.0;  ///< help when steps exceed factor * estimate
    ExplorationPolicy exploration_policy = ExplorationPolicy::uniform_random;
    std::uint64_t exploration_seed = 0;
    std::uint64_t plastic_steps = 0;  ///< decision cycles with SOM training on
    GoalTolerance goal_tolerance = GoalTolerance::node_equality;
    int min_edge_count = 1;

    void validate() const {
        if (budget_factor < 1.0) {
            throw std::invalid_argument("AgentConfig: budget_factor must be >= 1");
        }
        if (min_edge_count < 1) {
            throw std::invalid_argument("AgentConfig: min_edge_count must be >= 1");
        }
    }
};

struct StateSnapshot {
    AgentMode mode = AgentMode::exploring;
    std::optional<NodeId> current_node;
    std::optional<Goal> goal;
    std::optional<Plan> last_plan;
    std::optional<HelpRequest> pending_help;
    std::uint64_t lifetime_steps = 0;
    bool frozen = false;
    std::uint64_t som_version = 0;
};

struct SetGoalResult {
    Goal goal;
    std::optional<HelpRequest> help;
};

/// The decision loop: perceive, remember, plan one hop, act -- with the
/// human allowed in at every cycle boundary.
///
/// Life has two phases. While plastic (the first `plastic_steps` cycles)
/// the map trains on every observation and the agent wanders under the
/// exploration policy. Freezing -- automatic at the boundary, explicit via
/// freeze_memory(), or implied by the first goal -- fixes node identities
/// and discards transitions recorded against the still-moving map, so the
/// chain that planning trusts is built entirely on stable ground.
///
/// Overrides are a mailbox with last-writer-wins: the stored action replaces
/// exactly one cycle's autonomous choice, and it is executed, recorded, and
/// counted like any other action so the chain learns from the human too.
class CognitiveAgent {
public:
    CognitiveAgent(SomMap som, TransitionModel model, AgentConfig config, bool frozen = false)
        : som_(std::move(som)),
          model_(std::move(model)),
          cfg_(config),
          frozen_(frozen),
          rng_state_(config.exploration_seed ^ 0xD1B54A32D192ED03ULL) {
        cfg_.validate();
        if (model_.node_count() != som_.node_count()) {
            throw std::invalid_argument("CognitiveAgent: model/map node counts differ");
        }
        if (rng_state_ == 0) rng_state_ = 0x6A09E667F3BCC909ULL;
    }

    /// One decision cycle against a fresh observation.
    Decision step(const InputVector& observation) {
        maybe_auto_freeze();

        NodeId node;
        if (mode_ == AgentMode::exploring && !frozen_) {
            node = som_.train_step(observation);
        } else {
            node = som_.activate(observation);
        }

        // close out the previous cycle's action now that we see where it led
        if (pending_record_) {
            model_.record(pending_record_->first, pending_record_->second, node);
            pending_record_.reset();
        }
        current_node_ = node;

        Decision decision;
        if (pending_override_) {
            const Action a = *pending_override_;
            pending_override_.reset();
            if (mode_ == AgentMode::awaiting_help) {
                mode_ = goal_ ? AgentMode::seeking : AgentMode::exploring;
            }
            decision.action = a;
            decision.source = DecisionSource::human;
            execute(node, a);
        } else {
            switch (mode_) {
                case AgentMode::exploring:
                    decision.action = pick_exploration_action();
                    execute(node, *decision.action);
                    break;
                case AgentMode::seeking:
                    decide_seeking(node, decision);
                    break;
                case AgentMode::awaiting_help:
                case AgentMode::idle:
                    break;  // stopped: no action until the human steps in
                case AgentMode::overridden:
                    break;  // never stored
            }
        }

        ++lifetime_steps_;
        last_source_human_ = decision.source == DecisionSource::human;
        return decision;
    }

    /// Perception without a decision cycle: updates the current node only.
    /// Lets a goal be expressed before the loop has ever run.
    void observe(const InputVector& observation) {
        current_node_ = som_.activate(observation);
    }

    /// Express a goal as a sensory snapshot. Freezes memory if still
    /// plastic; an unreachable goal asks for help immediately.
    SetGoalResult set_goal(const InputVector& snapshot) {
        if (!current_node_) {
            throw std::logic_error("set_goal: agent has not perceived anything yet");
        }
        if (!frozen_) freeze_memory();
        const NodeId goal_node = som_.activate(snapshot);
        goal_ = Goal{snapshot, goal_node, std::nullopt, 0};
        pending_help_.reset();
        help_armed_no_path_ = true;
        help_armed_budget_ = true;
        mode_ = AgentMode::seeking;
        last_plan_.reset();

        SetGoalResult result{*goal_, std::nullopt};
        if (auto p = model_.plan(*current_node_, goal_node)) {
            goal_->initial_estimate = p->estimate;
            last_plan_ = std::move(p);
        } else {
            result.help = emit_help(HelpReason::no_path, *current_node_);
            help_armed_no_path_ = false;
            mode_ = AgentMode::awaiting_help;
        }
        result.goal = *goal_;
        return result;
    }

    /// Queue a human command for the next cycle; a newer command replaces an
    /// older unconsumed one.
    void override_action(Action action) { pending_override_ = action; }

    /// End the plastic phase: training stops and transitions recorded
    /// against the shifting map are discarded. Idempotent.
    void freeze_memory() {
        if (frozen_) return;
        frozen_ = true;
        model_.reset(som_.version());
        pending_record_.reset();
    }

    StateSnapshot current_state() const {
        StateSnapshot s;
        s.mode = last_source_human_ ? AgentMode::overridden : mode_;
        s.current_node = current_node_;
        s.goal = goal_;
        s.last_plan = last_plan_;
        s.pending_help = pending_help_;
        s.lifetime_steps = lifetime_steps_;
        s.frozen = frozen_;
        s.som_version = som_.version();
        return s;
    }

    const SomMap& som() const { return som_; }
    const TransitionModel& model() const { return model_; }
    const AgentConfig& config() const { return cfg_; }
    bool frozen() const { return frozen_; }
    std::uint64_t lifetime_steps() const { return lifetime_steps_; }

private:
    void maybe_auto_freeze() {
        if (!frozen_ && lifetime_steps_ >= cfg_.plastic_steps) {
            freeze_memory();
        }
    }

    void execute(NodeId node, Action a) {
        pending_record_ = std::make_pair(node, a);
        if (mode_ == AgentMode::seeking && goal_) {
            ++goal_->steps_taken;
        }
    }

    void decide_seeking(NodeId node, Decision& decision) {
        if (node == goal_->goal_node) {
            mode_ = AgentMode::idle;
            return;
        }
        auto plan = model_.plan(node, goal_->goal_node);
        if (!plan) {
            if (help_armed_no_path_) {
                decision.help = emit_help(HelpReason::no_path, node);
                help_armed_no_path_ = false;
            }
            mode_ = AgentMode::awaiting_help;
            return;
        }
        last_plan_ = plan;
        help_armed_no_path_ = true;  // a successful replan re-arms both triggers
        help_armed_budget_ = true;
        if (!goal_->initial_estimate) {
            // goal was set while unreachable; the first route found fixes it
            goal_->initial_estimate = plan->estimate;
        }
        const auto threshold =
            static_cast<std::int64_t>(std::ceil(cfg_.budget_factor * *goal_->initial_estimate));
        if (goal_->steps_taken > threshold) {
            if (help_armed_budget_) {
                decision.help = emit_help(HelpReason::estimate_exceeded, node);
                help_armed_budget_ = false;
            }
            mode_ = AgentMode::awaiting_help;
            return;
        }
        decision.action = plan->actions.front();
        decision.plan_snapshot = plan;
        execute(node, *decision.action);
    }

    HelpRequest emit_help(HelpReason reason, NodeId at_node) {
        HelpRequest help;
        help.reason = reason;
        help.at_node = at_node;
        if (reason == HelpReason::no_path) {
            help.detail = "no path from node " + std::to_string(at_node) + " to goal node " +
                          std::to_string(goal_ ? goal_->goal_node : -1);
        } else {
            help.detail = "took " + std::to_string(goal_->steps_taken) +
                          " steps against an estimate of " +
                          std::to_string(*goal_->initial_estimate);
        }
        pending_help_ = help;
        return help;
    }

    Action pick_exploration_action() {
        // xorshift64*; the top two bits are uniform over the four actions
        rng_state_ ^= rng_state_ << 13;
        rng_state_ ^= rng_state_ >> 7;
        rng_state_ ^= rng_state_ << 17;
        return static_cast<Action>((rng_state_ * 0x2545F4914F6CDD1DULL) >> 62);
    }

    SomMap som_;
    TransitionModel model_;
    AgentConfig cfg_;
    bool frozen_;
    std::uint64_t rng_state_;

    AgentMode mode_ = AgentMode::exploring;
    std::optional<NodeId> current_node_;
    std::optional<std::pair<NodeId, Action>> pending_record_;
    std::optional<Action> pending_override_;
    std::optional<Goal> goal_;
    std::optional<Plan> last_plan_;
    std::optional<HelpRequest> pending_help_;
    bool help_armed_no_path_ = true;
    bool help_armed_budget_ = true;
    bool last_source_human_ = false;
    std::uint64_t lifetime_steps_ = 0;
};

}  // namespace somnav
