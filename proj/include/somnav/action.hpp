#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace somnav {

/// The discrete command set. Encoding order is fixed: it doubles as the
/// tie-break order wherever two actions score equally.
enum class Action : std::int8_t {
    forward = 0,
    spin_left = 1,
    spin_right = 2,
    stop = 3,
};

inline constexpr int kActionCount = 4;

inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::forward, Action::spin_left, Action::spin_right, Action::stop};

inline constexpr std::string_view to_string(Action a) {
    switch (a) {
        case Action::forward: return "forward";
        case Action::spin_left: return "spin_left";
        case Action::spin_right: return "spin_right";
        case Action::stop: return "stop";
    }
    return "?";
}

inline std::optional<Action> parse_action(std::string_view s) {
    for (Action a : kAllActions) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

}  // namespace somnav
