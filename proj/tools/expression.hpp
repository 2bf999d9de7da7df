#pragma once

// Tiny parser for generator specs such as "t,t^2" or "sin(2*pi*t),exp(-t)".

#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roughpath::cli {

using Scalar = std::function<double(double)>;

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view src) : src_(src) {}

    Scalar parse() {
        Scalar e = expr();
        skip();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("generator '" + std::string(src_) + "': " + what + " at offset " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Scalar expr() {
        Scalar lhs = term();
        for (;;) {
            if (eat('+')) {
                lhs = [a = lhs, b = term()](double t) { return a(t) + b(t); };
            } else if (eat('-')) {
                lhs = [a = lhs, b = term()](double t) { return a(t) - b(t); };
            } else {
                return lhs;
            }
        }
    }

    Scalar term() {
        Scalar lhs = unary();
        for (;;) {
            if (eat('*')) {
                lhs = [a = lhs, b = unary()](double t) { return a(t) * b(t); };
            } else if (eat('/')) {
                lhs = [a = lhs, b = unary()](double t) { return a(t) / b(t); };
            } else {
                return lhs;
            }
        }
    }

    Scalar unary() {
        if (eat('-')) return [a = unary()](double t) { return -a(t); };
        if (eat('+')) return unary();
        return power();
    }

    Scalar power() {
        Scalar base = primary();
        if (eat('^')) return [a = base, b = unary()](double t) { return std::pow(a(t), b(t)); };
        return base;
    }

    Scalar primary() {
        skip();
        if (pos_ >= src_.size()) fail("unexpected end");
        if (eat('(')) {
            Scalar e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(std::string(src_.substr(pos_)), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            return [v](double) { return v; };
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            const std::string_view name = src_.substr(start, pos_ - start);
            if (name == "t") return [](double t) { return t; };
            if (name == "pi") return [](double) { return std::numbers::pi; };
            double (*fn)(double) = nullptr;
            if (name == "sin") fn = [](double x) { return std::sin(x); };
            else if (name == "cos") fn = [](double x) { return std::cos(x); };
            else if (name == "exp") fn = [](double x) { return std::exp(x); };
            else if (name == "log") fn = [](double x) { return std::log(x); };
            else if (name == "sqrt") fn = [](double x) { return std::sqrt(x); };
            else if (name == "abs") fn = [](double x) { return std::abs(x); };
            else fail("unknown identifier '" + std::string(name) + "'");
            if (!eat('(')) fail("expected '(' after " + std::string(name));
            Scalar arg = expr();
            if (!eat(')')) fail("missing ')'");
            return [fn, arg](double t) { return fn(arg(t)); };
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

/// Splits on top-level commas and parses each component.
inline std::vector<Scalar> parse_generator(std::string_view spec) {
    std::vector<Scalar> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= spec.size(); ++i) {
        if (i < spec.size() && spec[i] == '(') ++depth;
        if (i < spec.size() && spec[i] == ')') --depth;
        if (i == spec.size() || (spec[i] == ',' && depth == 0)) {
            out.push_back(ExpressionParser(spec.substr(start, i - start)).parse());
            start = i + 1;
        }
    }
    return out;
}

} // namespace roughpath::cli
