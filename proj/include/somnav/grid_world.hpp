#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "somnav/action.hpp"
#include "somnav/som.hpp"

namespace somnav {

enum class Heading : int { north = 0, east = 1, south = 2, west = 3 };

inline constexpr char heading_char(Heading h) {
    switch (h) {
        case Heading::north: return 'N';
        case Heading::east: return 'E';
        case Heading::south: return 'S';
        case Heading::west: return 'W';
    }
    return '?';
}

inline Heading heading_from_char(char c) {
    switch (c) {
        case 'N': return Heading::north;
        case 'E': return Heading::east;
        case 'S': return Heading::south;
        case 'W': return Heading::west;
    }
    throw std::invalid_argument(std::string("unknown heading '") + c + "'");
}

struct Pose {
    int row = 0;
    int col = 0;
    Heading heading = Heading::north;

    friend bool operator==(const Pose&, const Pose&) = default;
};

enum class SensorKind { ring16, image8x8 };

inline constexpr int sensor_dim(SensorKind k) {
    return k == SensorKind::ring16 ? 16 : 64;
}

inline SensorKind parse_sensor_kind(std::string_view s) {
    if (s == "ring16") return SensorKind::ring16;
    if (s == "image8x8") return SensorKind::image8x8;
    throw std::invalid_argument("unknown sensor kind '" + std::string(s) + "'");
}

class WorldFormatError : public std::runtime_error {
public:
    enum class Kind { malformed_grid, missing_start, open_boundary };

    WorldFormatError(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Occupancy grid with a closed wall boundary. Cells outside the grid read
/// as wall.
class GridWorld {
public:
    GridWorld(std::vector<std::string> rows, Pose start, double max_range)
        : rows_(std::move(rows)), start_(start), max_range_(max_range) {
        if (max_range_ <= 0.0) {
            throw std::invalid_argument("GridWorld: max_range must be positive");
        }
    }

    int rows() const { return static_cast<int>(rows_.size()); }
    int cols() const { return rows_.empty() ? 0 : static_cast<int>(rows_[0].size()); }
    double max_range() const { return max_range_; }
    Pose start_pose() const { return start_; }

    bool wall(int r, int c) const {
        if (r < 0 || c < 0 || r >= rows() || c >= cols()) return true;
        return rows_[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '#';
    }

    bool free_cell(int r, int c) const { return !wall(r, c); }

    const std::vector<std::string>& grid() const { return rows_; }

private:
    std::vector<std::string> rows_;
    Pose start_;
    double max_range_;
};

/// Parse a world from its text form: '#' wall, '.' free, 'S' free cell the
/// robot starts on (heading north, exactly one). Rows must be equal length
/// and the outer boundary solid wall.
inline GridWorld load_world(std::string_view text, double max_range = 8.0) {
    std::vector<std::string> rows;
    std::string line;
    for (char c : text) {
        if (c == '\n') {
            rows.push_back(line);
            line.clear();
        } else if (c != '\r') {
            line += c;
        }
    }
    if (!line.empty()) rows.push_back(line);
    while (!rows.empty() && rows.back().empty()) rows.pop_back();

    if (rows.size() < 3) {
        throw WorldFormatError(WorldFormatError::Kind::malformed_grid,
                               "world needs at least 3 rows");
    }
    const std::size_t width = rows[0].size();
    if (width < 3) {
        throw WorldFormatError(WorldFormatError::Kind::malformed_grid,
                               "world needs at least 3 columns");
    }
    int starts = 0;
    Pose start;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw WorldFormatError(WorldFormatError::Kind::malformed_grid,
                                   "ragged row " + std::to_string(r));
        }
        for (std::size_t c = 0; c < width; ++c) {
            const char ch = rows[r][c];
            if (ch == 'S') {
                ++starts;
                start = Pose{static_cast<int>(r), static_cast<int>(c), Heading::north};
                rows[r][c] = '.';
            } else if (ch != '#' && ch != '.') {
                throw WorldFormatError(WorldFormatError::Kind::malformed_grid,
                                       std::string("unexpected character '") + ch + "' at row " +
                                           std::to_string(r));
            }
        }
    }
    if (starts != 1) {
        throw WorldFormatError(WorldFormatError::Kind::missing_start,
                               "expected exactly one start cell, found " +
                                   std::to_string(starts));
    }
    for (std::size_t c = 0; c < width; ++c) {
        if (rows.front()[c] != '#' || rows.back()[c] != '#') {
            throw WorldFormatError(WorldFormatError::Kind::open_boundary,
                                   "top/bottom boundary must be wall");
        }
    }
    for (const std::string& row : rows) {
        if (row.front() != '#' || row.back() != '#') {
            throw WorldFormatError(WorldFormatError::Kind::open_boundary,
                                   "left/right boundary must be wall");
        }
    }
    return GridWorld(std::move(rows), start, max_range);
}

namespace detail {

inline void check_pose(const GridWorld& world, const Pose& pose) {
    if (!world.free_cell(pose.row, pose.col)) {
        throw std::invalid_argument("pose (" + std::to_string(pose.row) + "," +
                                    std::to_string(pose.col) + ") is not on a free cell");
    }
}

inline constexpr int kForwardRow[4] = {-1, 0, 1, 0};  // N E S W
inline constexpr int kForwardCol[4] = {0, 1, 0, -1};

}  // namespace detail

/// Deterministic dynamics: forward moves one cell if free (silently blocked
/// otherwise), spins rotate 90 degrees, stop holds.
inline Pose apply_action(const GridWorld& world, const Pose& pose, Action action) {
    detail::check_pose(world, pose);
    Pose next = pose;
    const int h = static_cast<int>(pose.heading);
    switch (action) {
        case Action::forward: {
            const int r = pose.row + detail::kForwardRow[h];
            const int c = pose.col + detail::kForwardCol[h];
            if (world.free_cell(r, c)) {
                next.row = r;
                next.col = c;
            }
            break;
        }
        case Action::spin_left:
            next.heading = static_cast<Heading>((h + 3) % 4);
            break;
        case Action::spin_right:
            next.heading = static_cast<Heading>((h + 1) % 4);
            break;
        case Action::stop:
            break;
    }
    return next;
}

/// Sixteen range rays, 22.5 degrees apart, clockwise, ray 0 straight ahead.
/// Each ray marches from the robot's cell center in 0.1-cell steps until a
/// sample falls in a wall cell; the reading is the distance to that cell's
/// center, saturated at max_range and normalized to [0,1].
///
/// Ray angles are canonicalized before any trigonometry, so the same
/// absolute direction yields bit-identical readings regardless of heading --
/// spinning in place permutes the vector exactly.
inline InputVector sense_ring16(const GridWorld& world, const Pose& pose) {
    detail::check_pose(world, pose);
    const double cy = pose.row + 0.5;
    const double cx = pose.col + 0.5;
    const double max_range = world.max_range();
    std::vector<double> out(16);
    for (int k = 0; k < 16; ++k) {
        double deg = 90.0 * static_cast<int>(pose.heading) + 22.5 * k;
        if (deg >= 360.0) deg -= 360.0;
        const double rad = deg * std::numbers::pi / 180.0;
        const double drow = -std::cos(rad);
        const double dcol = std::sin(rad);
        double reading = max_range;
        const int steps = static_cast<int>(max_range * 10.0);
        for (int i = 1; i <= steps; ++i) {
            const double t = 0.1 * i;
            const int r = static_cast<int>(std::floor(cy + t * drow));
            const int c = static_cast<int>(std::floor(cx + t * dcol));
            if (world.wall(r, c)) {
                const double hy = r + 0.5 - cy;
                const double hx = c + 0.5 - cx;
                reading = std::min(max_range, std::sqrt(hy * hy + hx * hx));
                break;
            }
        }
        out[static_cast<std::size_t>(k)] = reading / max_range;
    }
    return InputVector(std::move(out));
}

/// Occupancy image of the 16x16-cell window directly ahead (16 rows forward,
/// 8 cells to each side), wall=0 and free=1, box-downsampled to 8x8 and
/// flattened row-major with the far edge on top.
inline InputVector sense_image8x8(const GridWorld& world, const Pose& pose) {
    detail::check_pose(world, pose);
    const int h = static_cast<int>(pose.heading);
    const int fr = detail::kForwardRow[h];
    const int fc = detail::kForwardCol[h];
    const int rr = detail::kForwardRow[(h + 1) % 4];  // right-hand vector
    const int rc = detail::kForwardCol[(h + 1) % 4];
    double occ[16][16];
    for (int wi = 0; wi < 16; ++wi) {
        const int f = 16 - wi;  // row 0 = farthest ahead
        for (int wj = 0; wj < 16; ++wj) {
            const int l = wj - 8;
            const int r = pose.row + f * fr + l * rr;
            const int c = pose.col + f * fc + l * rc;
            occ[wi][wj] = world.wall(r, c) ? 0.0 : 1.0;
        }
    }
    std::vector<double> out(64);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            out[static_cast<std::size_t>(i * 8 + j)] =
                (occ[2 * i][2 * j] + occ[2 * i][2 * j + 1] + occ[2 * i + 1][2 * j] +
                 occ[2 * i + 1][2 * j + 1]) /
                4.0;
        }
    }
    return InputVector(std::move(out));
}

inline InputVector sense(const GridWorld& world, const Pose& pose, SensorKind kind) {
    return kind == SensorKind::ring16 ? sense_ring16(world, pose)
                                      : sense_image8x8(world, pose);
}

}  // namespace somnav
