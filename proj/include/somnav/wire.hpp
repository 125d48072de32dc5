#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "somnav/action.hpp"
#include "somnav/grid_world.hpp"
#include "somnav/som.hpp"

namespace somnav::wire {

/// A frame that cannot be decoded. `code` is wire-stable and goes straight
/// into an error{} reply.
class WireFormatError : public std::runtime_error {
public:
    WireFormatError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// client -> server -------------------------------------------------------

struct SetGoal {
    std::uint64_t seq = 0;
    std::uint64_t snapshot_id = 0;
};
struct Command {
    std::uint64_t seq = 0;
    Action action = Action::stop;
};
struct Pause {
    std::uint64_t seq = 0;
};
struct Resume {
    std::uint64_t seq = 0;
};
struct SaveSnapshot {
    std::uint64_t seq = 0;
};
struct Freeze {
    std::uint64_t seq = 0;
};

using ClientMessage = std::variant<SetGoal, Command, Pause, Resume, SaveSnapshot, Freeze>;

inline std::uint64_t seq_of(const ClientMessage& m) {
    return std::visit([](const auto& x) { return x.seq; }, m);
}

// server -> client -------------------------------------------------------

/// Snapshot of one committed decision cycle. last_action/last_source extend
/// the minimum schema so clients can render the executed decision without
/// reverse-engineering it from pose deltas.
struct State {
    std::uint64_t seq = 0;
    std::uint64_t tick = 0;
    Pose pose;
    std::string mode;
    std::optional<NodeId> current_node;
    std::optional<NodeId> goal_node;
    std::vector<NodeId> plan_nodes;
    std::vector<Action> plan_actions;
    std::optional<std::int64_t> steps_taken;
    std::optional<std::int64_t> initial_estimate;
    std::vector<double> observation;
    std::optional<Action> last_action;
    std::string last_source;
};
struct HelpRequestMsg {
    std::string reason;
    NodeId at_node = 0;
    std::string detail;
};
struct SnapshotSaved {
    std::uint64_t snapshot_id = 0;
};
struct Ack {
    std::uint64_t of_seq = 0;
};
struct Error {
    std::string code;
    std::string message;
};

using ServerMessage = std::variant<State, HelpRequestMsg, SnapshotSaved, Ack, Error>;

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw WireFormatError("bad_message", std::string("missing field: ") + key);
    }
    return *it;
}

inline std::uint64_t u64_field(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned()) {
        throw WireFormatError("bad_message",
                              std::string(key) + " must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

inline Action action_field(const nlohmann::json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) {
        throw WireFormatError("bad_message", std::string(key) + " must be a string");
    }
    auto a = parse_action(v.get<std::string>());
    if (!a) {
        throw WireFormatError("bad_message", "unknown action: " + v.get<std::string>());
    }
    return *a;
}

inline nlohmann::json pose_json(const Pose& p) {
    return {{"col", p.col}, {"heading", std::string(1, heading_char(p.heading))},
            {"row", p.row}};
}

inline Pose pose_from(const nlohmann::json& j) {
    Pose p;
    p.row = static_cast<int>(field(j, "row").get<std::int64_t>());
    p.col = static_cast<int>(field(j, "col").get<std::int64_t>());
    const auto h = field(j, "heading").get<std::string>();
    if (h.size() != 1) {
        throw WireFormatError("bad_message", "heading must be one character");
    }
    try {
        p.heading = heading_from_char(h[0]);
    } catch (const std::invalid_argument&) {
        throw WireFormatError("bad_message", "unknown heading: " + h);
    }
    return p;
}

}  // namespace detail

// encoding ---------------------------------------------------------------

inline std::string encode(const ClientMessage& msg) {
    nlohmann::json j;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            j["seq"] = m.seq;
            if constexpr (std::is_same_v<T, SetGoal>) {
                j["type"] = "set_goal";
                j["snapshot_id"] = m.snapshot_id;
            } else if constexpr (std::is_same_v<T, Command>) {
                j["type"] = "command";
                j["action"] = to_string(m.action);
            } else if constexpr (std::is_same_v<T, Pause>) {
                j["type"] = "pause";
            } else if constexpr (std::is_same_v<T, Resume>) {
                j["type"] = "resume";
            } else if constexpr (std::is_same_v<T, SaveSnapshot>) {
                j["type"] = "save_snapshot";
            } else {
                j["type"] = "freeze";
            }
        },
        msg);
    return j.dump() + "\n";
}

inline std::string encode(const ServerMessage& msg) {
    nlohmann::json j;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, State>) {
                j["type"] = "state";
                j["seq"] = m.seq;
                j["tick"] = m.tick;
                j["pose"] = detail::pose_json(m.pose);
                j["mode"] = m.mode;
                j["current_node"] =
                    m.current_node ? nlohmann::json(*m.current_node) : nlohmann::json();
                j["goal_node"] =
                    m.goal_node ? nlohmann::json(*m.goal_node) : nlohmann::json();
                j["plan_nodes"] = m.plan_nodes;
                auto names = nlohmann::json::array();
                for (Action a : m.plan_actions) names.push_back(to_string(a));
                j["plan_actions"] = std::move(names);
                j["steps_taken"] =
                    m.steps_taken ? nlohmann::json(*m.steps_taken) : nlohmann::json();
                j["initial_estimate"] = m.initial_estimate
                                            ? nlohmann::json(*m.initial_estimate)
                                            : nlohmann::json();
                j["observation"] = m.observation;
                j["last_action"] =
                    m.last_action ? nlohmann::json(to_string(*m.last_action)) : nlohmann::json();
                j["last_source"] = m.last_source;
            } else if constexpr (std::is_same_v<T, HelpRequestMsg>) {
                j["type"] = "help_request";
                j["reason"] = m.reason;
                j["at_node"] = m.at_node;
                j["detail"] = m.detail;
            } else if constexpr (std::is_same_v<T, SnapshotSaved>) {
                j["type"] = "snapshot_saved";
                j["snapshot_id"] = m.snapshot_id;
            } else if constexpr (std::is_same_v<T, Ack>) {
                j["type"] = "ack";
                j["of_seq"] = m.of_seq;
            } else {
                j["type"] = "error";
                j["code"] = m.code;
                j["message"] = m.message;
            }
        },
        msg);
    return j.dump() + "\n";
}

// decoding ---------------------------------------------------------------

inline ClientMessage decode_client(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw WireFormatError("bad_message", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw WireFormatError("bad_message", "frame must be an object");
    }
    const auto& t = detail::field(j, "type");
    if (!t.is_string()) {
        throw WireFormatError("bad_message", "type must be a string");
    }
    const std::string type = t.get<std::string>();
    const std::uint64_t seq = detail::u64_field(j, "seq");
    if (type == "set_goal") {
        return SetGoal{seq, detail::u64_field(j, "snapshot_id")};
    }
    if (type == "command") {
        return Command{seq, detail::action_field(j, "action")};
    }
    if (type == "pause") return Pause{seq};
    if (type == "resume") return Resume{seq};
    if (type == "save_snapshot") return SaveSnapshot{seq};
    if (type == "freeze") return Freeze{seq};
    throw WireFormatError("bad_message", "unknown type: " + type);
}

inline ServerMessage decode_server(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw WireFormatError("bad_message", std::string("not valid JSON: ") + e.what());
    }
    const std::string type = detail::field(j, "type").get<std::string>();
    if (type == "state") {
        State s;
        s.seq = detail::u64_field(j, "seq");
        s.tick = detail::u64_field(j, "tick");
        s.pose = detail::pose_from(detail::field(j, "pose"));
        s.mode = detail::field(j, "mode").get<std::string>();
        const auto& cn = detail::field(j, "current_node");
        if (!cn.is_null()) s.current_node = cn.get<NodeId>();
        const auto& gn = detail::field(j, "goal_node");
        if (!gn.is_null()) s.goal_node = gn.get<NodeId>();
        s.plan_nodes = detail::field(j, "plan_nodes").get<std::vector<NodeId>>();
        for (const auto& name : detail::field(j, "plan_actions")) {
            auto a = parse_action(name.get<std::string>());
            if (!a) {
                throw WireFormatError("bad_message", "unknown plan action");
            }
            s.plan_actions.push_back(*a);
        }
        const auto& st = detail::field(j, "steps_taken");
        if (!st.is_null()) s.steps_taken = st.get<std::int64_t>();
        const auto& ie = detail::field(j, "initial_estimate");
        if (!ie.is_null()) s.initial_estimate = ie.get<std::int64_t>();
        s.observation = detail::field(j, "observation").get<std::vector<double>>();
        const auto& la = detail::field(j, "last_action");
        if (!la.is_null()) {
            auto a = parse_action(la.get<std::string>());
            if (!a) {
                throw WireFormatError("bad_message", "unknown last_action");
            }
            s.last_action = *a;
        }
        s.last_source = detail::field(j, "last_source").get<std::string>();
        return s;
    }
    if (type == "help_request") {
        HelpRequestMsg h;
        h.reason = detail::field(j, "reason").get<std::string>();
        h.at_node = detail::field(j, "at_node").get<NodeId>();
        h.detail = detail::field(j, "detail").get<std::string>();
        return h;
    }
    if (type == "snapshot_saved") {
        return SnapshotSaved{detail::u64_field(j, "snapshot_id")};
    }
    if (type == "ack") {
        return Ack{detail::u64_field(j, "of_seq")};
    }
    if (type == "error") {
        return Error{detail::field(j, "code").get<std::string>(),
                     detail::field(j, "message").get<std::string>()};
    }
    throw WireFormatError("bad_message", "unknown type: " + type);
}

}  // namespace somnav::wire
