#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "somnav/action.hpp"
#include "somnav/som.hpp"
#include "somnav/transition_model.hpp"

namespace somnav {

/// Memory snapshot files use this suffix by convention.
inline constexpr const char* kMemoryFileExtension = ".somnav.json";

class MemoryIoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Source bytes are not valid JSON.
class ParseError : public MemoryIoError {
    using MemoryIoError::MemoryIoError;
};

/// The file declares a schema version this build does not speak.
class VersionError : public MemoryIoError {
    using MemoryIoError::MemoryIoError;
};

/// Well-formed JSON that breaks a type invariant; the message carries the
/// offending field path.
class ValidationError : public MemoryIoError {
    using MemoryIoError::MemoryIoError;
};

/// The file itself could not be read or written.
class FileError : public MemoryIoError {
    using MemoryIoError::MemoryIoError;
};

/// Agent settings that live in the memory file. Runtime-only knobs
/// (exploration seed, min_edge_count) are deliberately absent: they describe
/// a session, not the memory.
struct AgentSettings {
    double budget_factor = 1.0;
    std::uint64_t plastic_steps = 0;
    bool frozen = false;
};

struct LoadedMemory {
    SomMap som;
    TransitionModel model;
    AgentSettings agent;
};

namespace detail {

// Shortest decimal within 17 significant digits: enough to identify any
// double uniquely, so parsing the text recovers the exact bits.
inline void append_double(std::string& out, double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline void append_u64(std::string& out, std::uint64_t v) { out += std::to_string(v); }
inline void append_i64(std::string& out, std::int64_t v) { out += std::to_string(v); }

inline const nlohmann::json& member(const nlohmann::json& obj, const std::string& path,
                                    const char* key) {
    if (!obj.is_object()) {
        throw ValidationError(path + ": expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError(path + "." + key + ": missing");
    }
    return *it;
}

inline std::int64_t require_int(const nlohmann::json& v, const std::string& path,
                                std::int64_t lo, std::int64_t hi) {
    if (!v.is_number_integer()) {
        throw ValidationError(path + ": expected an integer");
    }
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
        throw ValidationError(path + ": out of range");
    }
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
        throw ValidationError(path + ": out of range");
    }
    return x;
}

inline std::uint64_t require_u64(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number_unsigned()) {
        throw ValidationError(path + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

inline double require_double(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number()) {
        throw ValidationError(path + ": expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ValidationError(path + ": not finite");
    }
    return x;
}

inline bool require_bool(const nlohmann::json& v, const std::string& path) {
    if (!v.is_boolean()) {
        throw ValidationError(path + ": expected a boolean");
    }
    return v.get<bool>();
}

}  // namespace detail

/// Canonical bytes for a memory snapshot: keys in alphabetical order at
/// every level, transitions in (from, action, to) order, doubles printed to
/// 17 significant digits. Identical states encode to identical bytes.
inline std::string encode_memory(const SomMap& som, const TransitionModel& model,
                                 const AgentSettings& agent) {
    if (som.config().node_count() != model.node_count()) {
        throw ValidationError("som/model node counts disagree: " +
                              std::to_string(som.config().node_count()) + " vs " +
                              std::to_string(model.node_count()));
    }
    if (!std::isfinite(agent.budget_factor) || agent.budget_factor < 1.0) {
        throw ValidationError("agent.budget_factor: must be >= 1");
    }
    const SomConfig& cfg = som.config();
    std::string out;
    out.reserve(64 + static_cast<std::size_t>(cfg.node_count()) *
                         static_cast<std::size_t>(cfg.dim) * 20);

    out += "{\"agent\":{\"budget_factor\":";
    detail::append_double(out, agent.budget_factor);
    out += ",\"frozen\":";
    out += agent.frozen ? "true" : "false";
    out += ",\"plastic_steps\":";
    detail::append_u64(out, agent.plastic_steps);
    out += ",\"som_version\":";
    detail::append_u64(out, som.version());

    out += "},\"som\":{\"alpha_neighbor\":";
    detail::append_double(out, cfg.alpha_neighbor);
    out += ",\"alpha_winner\":";
    detail::append_double(out, cfg.alpha_winner);
    out += ",\"dim\":";
    detail::append_i64(out, cfg.dim);
    out += ",\"height\":";
    detail::append_i64(out, cfg.height);
    out += ",\"seed\":";
    detail::append_u64(out, cfg.seed);
    out += ",\"weights\":[";
    const auto& w = som.raw_weights();
    for (int n = 0; n < cfg.node_count(); ++n) {
        if (n > 0) out += ',';
        out += '[';
        for (int d = 0; d < cfg.dim; ++d) {
            if (d > 0) out += ',';
            detail::append_double(out, w[static_cast<std::size_t>(n * cfg.dim + d)]);
        }
        out += ']';
    }
    out += "],\"width\":";
    detail::append_i64(out, cfg.width);

    out += "},\"transitions\":[";
    bool first = true;
    model.for_each_count([&](NodeId from, Action a, NodeId to, std::int64_t c) {
        if (!first) out += ',';
        first = false;
        out += "{\"action\":\"";
        out += to_string(a);
        out += "\",\"count\":";
        detail::append_i64(out, c);
        out += ",\"from\":";
        detail::append_i64(out, from);
        out += ",\"to\":";
        detail::append_i64(out, to);
        out += '}';
    });
    out += "],\"version\":1}\n";
    return out;
}

/// Parse and validate snapshot bytes. min_edge_count is session config, not
/// file content, so the caller supplies it.
inline LoadedMemory decode_memory(const std::string& text, int min_edge_count = 1) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("parse-error: ") + e.what());
    }
    using detail::member;

    const auto& ver = member(j, "$", "version");
    if (!ver.is_number_integer()) {
        throw ValidationError("version: expected an integer");
    }
    if (ver.get<std::int64_t>() != 1) {
        throw VersionError("version-unsupported: this build reads version 1, file says " +
                           ver.dump());
    }

    const auto& jsom = member(j, "$", "som");
    SomConfig cfg;
    cfg.width = static_cast<int>(
        detail::require_int(member(jsom, "som", "width"), "som.width", 1, 1 << 15));
    cfg.height = static_cast<int>(
        detail::require_int(member(jsom, "som", "height"), "som.height", 1, 1 << 15));
    cfg.dim = static_cast<int>(
        detail::require_int(member(jsom, "som", "dim"), "som.dim", 1, 1 << 20));
    cfg.alpha_winner =
        detail::require_double(member(jsom, "som", "alpha_winner"), "som.alpha_winner");
    cfg.alpha_neighbor =
        detail::require_double(member(jsom, "som", "alpha_neighbor"), "som.alpha_neighbor");
    cfg.seed = detail::require_u64(member(jsom, "som", "seed"), "som.seed");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("som: ") + e.what());
    }

    const auto& jagent = member(j, "$", "agent");
    AgentSettings agent;
    agent.budget_factor =
        detail::require_double(member(jagent, "agent", "budget_factor"), "agent.budget_factor");
    if (agent.budget_factor < 1.0) {
        throw ValidationError("agent.budget_factor: must be >= 1");
    }
    agent.plastic_steps =
        detail::require_u64(member(jagent, "agent", "plastic_steps"), "agent.plastic_steps");
    agent.frozen = detail::require_bool(member(jagent, "agent", "frozen"), "agent.frozen");
    const std::uint64_t som_version =
        detail::require_u64(member(jagent, "agent", "som_version"), "agent.som_version");

    const auto& jweights = member(jsom, "som", "weights");
    if (!jweights.is_array() ||
        jweights.size() != static_cast<std::size_t>(cfg.node_count())) {
        throw ValidationError("som.weights: expected " + std::to_string(cfg.node_count()) +
                              " rows");
    }
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(cfg.node_count()) *
                    static_cast<std::size_t>(cfg.dim));
    for (std::size_t n = 0; n < jweights.size(); ++n) {
        const auto& row = jweights[n];
        const std::string row_path = "som.weights[" + std::to_string(n) + "]";
        if (!row.is_array() || row.size() != static_cast<std::size_t>(cfg.dim)) {
            throw ValidationError(row_path + ": expected " + std::to_string(cfg.dim) +
                                  " entries");
        }
        for (std::size_t d = 0; d < row.size(); ++d) {
            const std::string cell = row_path + "[" + std::to_string(d) + "]";
            const double v = detail::require_double(row[d], cell);
            if (v < 0.0 || v > 1.0) {
                throw ValidationError(cell + ": weight outside [0,1]");
            }
            weights.push_back(v);
        }
    }

    TransitionModel model(cfg.node_count(), min_edge_count, som_version);
    const auto& jtrans = member(j, "$", "transitions");
    if (!jtrans.is_array()) {
        throw ValidationError("transitions: expected an array");
    }
    for (std::size_t i = 0; i < jtrans.size(); ++i) {
        const std::string tp = "transitions[" + std::to_string(i) + "]";
        const auto& e = jtrans[i];
        const auto from = static_cast<NodeId>(detail::require_int(
            member(e, tp, "from"), tp + ".from", 0, cfg.node_count() - 1));
        const auto to = static_cast<NodeId>(detail::require_int(
            member(e, tp, "to"), tp + ".to", 0, cfg.node_count() - 1));
        const auto& jact = member(e, tp, "action");
        if (!jact.is_string()) {
            throw ValidationError(tp + ".action: expected a string");
        }
        const auto action = parse_action(jact.get<std::string>());
        if (!action) {
            throw ValidationError(tp + ".action: unknown symbol " + jact.dump());
        }
        const std::int64_t count = detail::require_int(
            member(e, tp, "count"), tp + ".count", 1, std::numeric_limits<std::int64_t>::max());
        if (model.count(from, *action, to) != 0) {
            throw ValidationError(tp + ": duplicate (from, action, to) triple");
        }
        model.record(from, *action, to, count);
    }

    SomMap som = [&] {
        try {
            return SomMap(cfg, std::move(weights), som_version);
        } catch (const std::invalid_argument& e) {
            throw ValidationError(std::string("som: ") + e.what());
        }
    }();
    return LoadedMemory{std::move(som), std::move(model), agent};
}

inline void save_memory(const SomMap& som, const TransitionModel& model,
                        const AgentSettings& agent, const std::filesystem::path& path) {
    // encode validates first, so a bad state never truncates an existing file
    const std::string bytes = encode_memory(som, model, agent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError("cannot write " + path.string());
    }
    out << bytes;
    out.flush();
    if (!out) {
        throw FileError("short write to " + path.string());
    }
}

inline LoadedMemory load_memory(const std::filesystem::path& path, int min_edge_count = 1) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw FileError("read failure on " + path.string());
    }
    return decode_memory(buf.str(), min_edge_count);
}

}  // namespace somnav
