#pragma once

// Fixed-size 2-D vector and matrix algebra. Everything the planner does lives
// in R^2, so the types are plain aggregates with closed-form eigen routines.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

namespace mmtrack {

/// Absolute tolerance for eigenvalue nonnegativity checks.
inline constexpr double kPsdTolerance = 1e-9;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

    [[nodiscard]] double norm() const { return std::hypot(x, y); }
    [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline std::ostream& operator<<(std::ostream& os, Vec2 v) {
    return os << '(' << v.x << ", " << v.y << ')';
}

/// General 2x2 matrix, row major: [[a, b], [c, d]].
struct Mat2 {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 zero() { return {}; }
    static constexpr Mat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }

    [[nodiscard]] constexpr Mat2 transpose() const { return {a, c, b, d}; }
    [[nodiscard]] constexpr double det() const { return a * d - b * c; }
    [[nodiscard]] constexpr double trace() const { return a + d; }
    [[nodiscard]] bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
    }

    friend constexpr Mat2 operator*(const Mat2& l, const Mat2& r) {
        return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
                l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
    }
    friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
        return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
    }
    friend constexpr Mat2 operator+(const Mat2& l, const Mat2& r) {
        return {l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
    }
    friend constexpr Mat2 operator-(const Mat2& l, const Mat2& r) {
        return {l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& m) {
        return {s * m.a, s * m.b, s * m.c, s * m.d};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Eigen-pair of a symmetric 2x2 matrix, largest first.
struct SymEigen {
    double major = 0.0;
    double minor = 0.0;
    Vec2 major_axis{1.0, 0.0};
    Vec2 minor_axis{0.0, 1.0};
};

/// Symmetric 2x2 matrix storing a single off-diagonal entry.
struct SymMat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    static constexpr SymMat2 identity() { return {1.0, 0.0, 1.0}; }
    static constexpr SymMat2 zero() { return {}; }
    static constexpr SymMat2 diag(double p, double q) { return {p, 0.0, q}; }
    static constexpr SymMat2 scaled_identity(double s) { return {s, 0.0, s}; }

    /// Symmetric part of a general matrix.
    static constexpr SymMat2 symmetrize(const Mat2& m) { return {m.a, 0.5 * (m.b + m.c), m.d}; }

    [[nodiscard]] constexpr Mat2 full() const { return {a11, a12, a12, a22}; }
    [[nodiscard]] constexpr double trace() const { return a11 + a22; }
    [[nodiscard]] constexpr double det() const { return a11 * a22 - a12 * a12; }
    [[nodiscard]] bool finite() const {
        return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a22);
    }

    /// Both eigenvalues via the trace/determinant formula, largest first.
    [[nodiscard]] std::array<double, 2> eigenvalues() const {
        const double mean = 0.5 * (a11 + a22);
        const double radius = std::hypot(0.5 * (a11 - a22), a12);
        return {mean + radius, mean - radius};
    }

    [[nodiscard]] double min_eigenvalue() const { return eigenvalues()[1]; }

    [[nodiscard]] SymEigen eigen() const {
        const auto ev = eigenvalues();
        SymEigen out{ev[0], ev[1], {1.0, 0.0}, {0.0, 1.0}};
        if (a12 == 0.0) {
            if (a22 > a11) {
                out.major_axis = {0.0, 1.0};
                out.minor_axis = {-1.0, 0.0};
            }
            return out;
        }
        // (A - lambda I) v = 0 with the row of larger magnitude for conditioning.
        Vec2 v = (std::abs(ev[0] - a22) >= std::abs(ev[0] - a11)) ? Vec2{ev[0] - a22, a12}
                                                                    : Vec2{a12, ev[0] - a11};
        const double n = v.norm();
        v = (1.0 / n) * v;
        out.major_axis = v;
        out.minor_axis = {-v.y, v.x};
        return out;
    }

    /// True when both eigenvalues are >= -tol.
    [[nodiscard]] bool is_psd(double tol = kPsdTolerance) const { return min_eigenvalue() >= -tol; }

    /// Inverse; caller checks the determinant.
    [[nodiscard]] constexpr SymMat2 inverse() const {
        const double inv = 1.0 / det();
        return {a22 * inv, -a12 * inv, a11 * inv};
    }

    friend constexpr SymMat2 operator+(const SymMat2& l, const SymMat2& r) {
        return {l.a11 + r.a11, l.a12 + r.a12, l.a22 + r.a22};
    }
    friend constexpr SymMat2 operator-(const SymMat2& l, const SymMat2& r) {
        return {l.a11 - r.a11, l.a12 - r.a12, l.a22 - r.a22};
    }
    friend constexpr SymMat2 operator*(double s, const SymMat2& m) {
        return {s * m.a11, s * m.a12, s * m.a22};
    }
    friend constexpr bool operator==(const SymMat2&, const SymMat2&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const SymMat2& m) {
    return os << "[[" << m.a11 << ", " << m.a12 << "], [" << m.a12 << ", " << m.a22 << "]]";
}

/// M * S * M^T, evaluated so the result is symmetric by construction.
constexpr SymMat2 congruence(const Mat2& m, const SymMat2& s) {
    // rows of M*S
    const double r1x = m.a * s.a11 + m.b * s.a12;
    const double r1y = m.a * s.a12 + m.b * s.a22;
    const double r2x = m.c * s.a11 + m.d * s.a12;
    const double r2y = m.c * s.a12 + m.d * s.a22;
    return {r1x * m.a + r1y * m.b, r1x * m.c + r1y * m.d, r2x * m.c + r2y * m.d};
}

/// M * M^T.
constexpr SymMat2 gram(const Mat2& m) {
    return {m.a * m.a + m.b * m.b, m.a * m.c + m.b * m.d, m.c * m.c + m.d * m.d};
}

constexpr Mat2 operator*(const Mat2& l, const SymMat2& r) { return l * r.full(); }
constexpr Mat2 operator*(const SymMat2& l, const Mat2& r) { return l.full() * r; }

/// Lower Cholesky factor of a PSD matrix; clamps tiny negative pivots to zero.
inline Mat2 cholesky(const SymMat2& s) {
    const double l11 = std::sqrt(std::max(s.a11, 0.0));
    const double l21 = l11 > 0.0 ? s.a12 / l11 : 0.0;
    const double l22 = std::sqrt(std::max(s.a22 - l21 * l21, 0.0));
    return {l11, 0.0, l21, l22};
}

}  // namespace mmtrack
