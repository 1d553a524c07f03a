#include "perfhom/field_expr.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "perfhom/errors.hpp"

namespace perfhom {

namespace {

double parse_number(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("trailing characters in number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ConfigError("expected a number, got '" + s + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("number out of range: '" + s + "'");
    }
}

std::vector<double> parse_numbers(const std::string& s, std::size_t expected) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
    if (out.size() != expected) {
        throw ConfigError("expected " + std::to_string(expected) + " comma-separated numbers in '" +
                          s + "'");
    }
    return out;
}

}  // namespace

FieldExpr FieldExpr::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return FieldExpr::constant(parse_number(text));
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (head == "const") return FieldExpr::constant(parse_number(rest));
    if (head == "sines") return FieldExpr::sines(parse_number(rest));
    if (head == "linear") {
        const auto v = parse_numbers(rest, 3);
        return FieldExpr::linear(v[0], v[1], v[2]);
    }
    throw ConfigError("unknown field expression '" + text +
                      "' (expected const:, sines:, linear: or a bare number)");
}

std::string FieldExpr::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::Constant: os << "const:" << c0; break;
        case Kind::Sines: os << "sines:" << c0; break;
        case Kind::Linear: os << "linear:" << c0 << "," << cx << "," << cy; break;
    }
    return os.str();
}

}  // namespace perfhom
