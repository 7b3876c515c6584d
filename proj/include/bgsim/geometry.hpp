#pragma once

#include <cmath>
#include <cstdint>

namespace bgsim {

// Integer grid cell, x = column, y = row.
struct Cell {
    int x = 0;
    int y = 0;

    bool operator==(const Cell&) const = default;
};

// Real-valued point or offset in cell units.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

inline double squared_norm(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::sqrt(squared_norm(a)); }

inline Vec2 to_vec(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

inline int chebyshev(Cell a, Cell b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Row-major scan order: (y, x) ascending. Used for deterministic tie-breaks.
inline bool row_major_less(Cell a, Cell b) {
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

}  // namespace bgsim
