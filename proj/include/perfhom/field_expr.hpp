#pragma once

#include <cmath>
#include <string>

namespace perfhom {

/// Small closed-form catalog for spatial coefficient fields: noise multipliers,
/// forcing terms, initial data. Parsed from strings like
///   "const:1.0"        c
///   "sines:0.5"        c * sin(pi x) * sin(pi y)
///   "linear:a,b,c"     a + b x + c y
/// A bare number is shorthand for const.
struct FieldExpr {
    enum class Kind { Constant, Sines, Linear };

    Kind kind = Kind::Constant;
    double c0 = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    static FieldExpr constant(double value) {
        FieldExpr e;
        e.kind = Kind::Constant;
        e.c0 = value;
        return e;
    }

    static FieldExpr sines(double amplitude) {
        FieldExpr e;
        e.kind = Kind::Sines;
        e.c0 = amplitude;
        return e;
    }

    static FieldExpr linear(double a, double b, double c) {
        FieldExpr e;
        e.kind = Kind::Linear;
        e.c0 = a;
        e.cx = b;
        e.cy = c;
        return e;
    }

    double operator()(double x, double y) const {
        switch (kind) {
            case Kind::Constant: return c0;
            case Kind::Sines: return c0 * std::sin(M_PI * x) * std::sin(M_PI * y);
            case Kind::Linear: return c0 + cx * x + cy * y;
        }
        return 0.0;
    }

    bool is_zero() const {
        if (kind == Kind::Linear) return c0 == 0.0 && cx == 0.0 && cy == 0.0;
        return c0 == 0.0;
    }

    /// Throws ConfigError on malformed input.
    static FieldExpr parse(const std::string& text);
    std::string to_string() const;
};

}  // namespace perfhom
