#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "somnav/agent.hpp"
#include "somnav/grid_world.hpp"
#include "somnav/wire.hpp"

namespace somnav {

/// Observations the operator marked as candidate goals. Ids start at 1 and
/// never repeat, even if entries were removed.
class SnapshotStore {
public:
    std::uint64_t add(InputVector v) {
        snaps_.emplace(next_id_, std::move(v));
        return next_id_++;
    }

    const InputVector* find(std::uint64_t id) const {
        auto it = snaps_.find(id);
        return it == snaps_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return snaps_.size(); }

private:
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, InputVector> snaps_;
};

/// One committed decision cycle. tick is 1-based: record N describes the
/// N-th cycle, and "boundary N" means N cycles have completed.
struct CycleRecord {
    std::uint64_t tick = 0;
    Decision decision;
    NodeId node = 0;
    Pose pose_after;
    std::vector<double> observation;
};

/// What apply() decided about one client message. `reply` is always an Ack
/// or an Error; `events` carries any snapshot_saved/help_request frames the
/// message produced. Pacing is the caller's business: a ticking server obeys
/// it, a headless driver ignores it.
struct ApplyResult {
    enum class Pace { none, pause, resume };

    wire::ServerMessage reply;
    std::vector<wire::ServerMessage> events;
    Pace pace = Pace::none;
};

/// The perceive-decide-act loop over one world and one agent, plus the
/// message surface operators use to steer it. Both the headless runner and
/// the live service drive exactly this class, so their decision sequences
/// can only differ if their message timelines do.
class Engine {
public:
    Engine(GridWorld world, SensorKind sensor, CognitiveAgent agent)
        : world_(std::move(world)),
          sensor_(sensor),
          agent_(std::move(agent)),
          pose_(world_.start_pose()) {}

    const GridWorld& world() const { return world_; }
    SensorKind sensor() const { return sensor_; }
    CognitiveAgent& agent() { return agent_; }
    const CognitiveAgent& agent() const { return agent_; }
    SnapshotStore& snapshots() { return snapshots_; }
    Pose pose() const { return pose_; }
    std::uint64_t tick() const { return tick_; }
    const std::vector<CycleRecord>& log() const { return log_; }

    /// Reposition the robot (trial setup). Only free cells are standable.
    void set_pose(const Pose& p) {
        if (world_.wall(p.row, p.col)) {
            throw std::invalid_argument("set_pose: cell is a wall");
        }
        pose_ = p;
    }

    const CycleRecord& run_cycle() {
        InputVector obs = sense(world_, pose_, sensor_);
        Decision d = agent_.step(obs);
        if (d.action) {
            pose_ = apply_action(world_, pose_, *d.action);
        }
        ++tick_;
        CycleRecord rec;
        rec.tick = tick_;
        rec.decision = std::move(d);
        rec.node = *agent_.current_state().current_node;
        rec.pose_after = pose_;
        rec.observation = obs.values();
        log_.push_back(std::move(rec));
        return log_.back();
    }

    /// Apply one operator message at a cycle boundary.
    ApplyResult apply(const wire::ClientMessage& msg) {
        ApplyResult out;
        const std::uint64_t seq = wire::seq_of(msg);
        out.reply = wire::Ack{seq};
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, wire::SetGoal>) {
                    const InputVector* snap = snapshots_.find(m.snapshot_id);
                    if (snap == nullptr) {
                        out.reply = wire::Error{
                            "unknown_snapshot",
                            "no snapshot with id " + std::to_string(m.snapshot_id)};
                        return;
                    }
                    if (tick_ == 0) {
                        // prime the activation so the goal has a "from here"
                        agent_.observe(sense(world_, pose_, sensor_));
                    }
                    SetGoalResult r = agent_.set_goal(*snap);
                    if (r.help) {
                        out.events.push_back(help_message(*r.help));
                    }
                } else if constexpr (std::is_same_v<T, wire::Command>) {
                    agent_.override_action(m.action);
                } else if constexpr (std::is_same_v<T, wire::Pause>) {
                    out.pace = ApplyResult::Pace::pause;
                } else if constexpr (std::is_same_v<T, wire::Resume>) {
                    out.pace = ApplyResult::Pace::resume;
                } else if constexpr (std::is_same_v<T, wire::SaveSnapshot>) {
                    const std::uint64_t id = snapshots_.add(sense(world_, pose_, sensor_));
                    out.events.push_back(wire::SnapshotSaved{id});
                } else {
                    static_assert(std::is_same_v<T, wire::Freeze>);
                    agent_.freeze_memory();
                }
            },
            msg);
        return out;
    }

    /// The state frame describing the most recent cycle. Call only after at
    /// least one run_cycle().
    wire::State state_message(std::uint64_t seq) const {
        if (log_.empty()) {
            throw std::logic_error("state_message: no cycle has run");
        }
        const CycleRecord& rec = log_.back();
        const StateSnapshot st = agent_.current_state();
        wire::State s;
        s.seq = seq;
        s.tick = rec.tick;
        s.pose = rec.pose_after;
        s.mode = std::string(to_string(st.mode));
        s.current_node = st.current_node;
        if (st.goal) {
            s.goal_node = st.goal->goal_node;
            s.steps_taken = st.goal->steps_taken;
            if (st.goal->initial_estimate) {
                s.initial_estimate = *st.goal->initial_estimate;
            }
        }
        if (rec.decision.plan_snapshot) {
            s.plan_nodes = rec.decision.plan_snapshot->nodes;
            s.plan_actions = rec.decision.plan_snapshot->actions;
        }
        s.observation = rec.observation;
        s.last_action = rec.decision.action;
        s.last_source = std::string(to_string(rec.decision.source));
        return s;
    }

    static wire::ServerMessage help_message(const HelpRequest& h) {
        return wire::HelpRequestMsg{std::string(to_string(h.reason)), h.at_node, h.detail};
    }

private:
    GridWorld world_;
    SensorKind sensor_;
    CognitiveAgent agent_;
    Pose pose_;
    std::uint64_t tick_ = 0;
    SnapshotStore snapshots_;
    std::vector<CycleRecord> log_;
};

/// A client message pinned to a cycle boundary: applied once `at_cycle`
/// cycles have completed (0 = before the first).
struct ScriptEntry {
    std::uint64_t at_cycle = 0;
    wire::ClientMessage message;
};

/// Parse a script: one JSON object per line, a client frame plus "at_cycle".
/// Missing seq fields are filled from the line number. Entries are returned
/// in (at_cycle, line) order.
inline std::vector<ScriptEntry> parse_script(const std::string& text) {
    std::vector<ScriptEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw wire::WireFormatError(
                "bad_message", "script line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("at_cycle") ||
            !j["at_cycle"].is_number_unsigned()) {
            throw wire::WireFormatError(
                "bad_message",
                "script line " + std::to_string(line_no) + ": at_cycle required");
        }
        ScriptEntry entry;
        entry.at_cycle = j["at_cycle"].get<std::uint64_t>();
        j.erase("at_cycle");
        if (!j.contains("seq")) j["seq"] = line_no;
        entry.message = wire::decode_client(j.dump());
        out.push_back(std::move(entry));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ScriptEntry& a, const ScriptEntry& b) {
                         return a.at_cycle < b.at_cycle;
                     });
    return out;
}

/// Feed every script entry due at the current boundary into the engine.
/// Returns the apply results in order (callers wanting events inspect them).
inline std::vector<ApplyResult> apply_due_entries(Engine& engine,
                                                  const std::vector<ScriptEntry>& script,
                                                  std::size_t& next_index) {
    std::vector<ApplyResult> results;
    while (next_index < script.size() &&
           script[next_index].at_cycle <= engine.tick()) {
        results.push_back(engine.apply(script[next_index].message));
        ++next_index;
    }
    return results;
}

/// Headless driver: a fixed number of cycles with script entries applied at
/// their boundaries. Returns the frames a live service would broadcast for
/// the same timeline: snapshot/help/error events in apply order, one state
/// per cycle, help frames after the state of the cycle that raised them.
/// Acks are a transport concern and are omitted. Entries scheduled past the
/// final boundary are never applied.
inline std::vector<wire::ServerMessage> run_scripted(Engine& engine, std::uint64_t cycles,
                                                     const std::vector<ScriptEntry>& script) {
    std::vector<wire::ServerMessage> frames;
    std::size_t idx = 0;
    std::uint64_t seq = 0;
    for (std::uint64_t c = 0; c < cycles; ++c) {
        for (const ApplyResult& r : apply_due_entries(engine, script, idx)) {
            if (std::holds_alternative<wire::Error>(r.reply)) {
                frames.push_back(r.reply);
            }
            frames.insert(frames.end(), r.events.begin(), r.events.end());
        }
        const CycleRecord& rec = engine.run_cycle();
        frames.push_back(engine.state_message(++seq));
        if (rec.decision.help) {
            frames.push_back(Engine::help_message(*rec.decision.help));
        }
    }
    return frames;
}

}  // namespace somnav
