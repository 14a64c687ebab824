#pragma once
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lesionboost/errors.hpp"

namespace lesionboost {

// Arithmetic expressions over named numeric columns.
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | primary
//   primary := NUMBER | IDENT | FN '(' expr {',' expr} ')' | '(' expr ')'
//   FN      := abs | log | sqrt | min | max
//
// Missing inputs are NaN and propagate. Division by zero, log of a
// non-positive value and sqrt of a negative value all yield NaN (missing),
// never +-inf.
class compiled_expr {
  public:
    double eval(std::span<const double> columns) const { return eval_node(root_, columns); }

    const std::vector<size_t>& referenced_columns() const { return refs_; }

  private:
    enum class op { number, column, neg, add, sub, mul, div, abs, log, sqrt, min, max };

    struct node {
        op kind;
        double value = 0.0; // number
        size_t column = 0;  // column
        std::unique_ptr<node> a, b;
    };

    std::unique_ptr<node> root_;
    std::vector<size_t> refs_;

    static double eval_node(const std::unique_ptr<node>& n, std::span<const double> cols) {
        switch (n->kind) {
            case op::number: return n->value;
            case op::column: return cols[n->column];
            case op::neg: return -eval_node(n->a, cols);
            case op::add: return eval_node(n->a, cols) + eval_node(n->b, cols);
            case op::sub: return eval_node(n->a, cols) - eval_node(n->b, cols);
            case op::mul: return eval_node(n->a, cols) * eval_node(n->b, cols);
            case op::div: {
                double num = eval_node(n->a, cols);
                double den = eval_node(n->b, cols);
                if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
                return num / den;
            }
            case op::abs: return std::fabs(eval_node(n->a, cols));
            case op::log: {
                double x = eval_node(n->a, cols);
                if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
                return std::log(x);
            }
            case op::sqrt: {
                double x = eval_node(n->a, cols);
                if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
                return std::sqrt(x);
            }
            case op::min: return std::fmin(eval_node(n->a, cols), eval_node(n->b, cols));
            case op::max: return std::fmax(eval_node(n->a, cols), eval_node(n->b, cols));
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    friend class expr_parser;
};

class expr_parser {
  public:
    // `columns` maps identifiers to evaluation slots. Unknown identifiers
    // raise catalog_error.
    static compiled_expr compile(const std::string& text, const std::vector<std::string>& columns) {
        expr_parser p(text, columns);
        compiled_expr out;
        out.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos_ != p.text_.size())
            throw catalog_error("unexpected trailing input at offset " + std::to_string(p.pos_) +
                                " in '" + text + "'");
        out.refs_ = std::move(p.refs_);
        return out;
    }

  private:
    expr_parser(const std::string& text, const std::vector<std::string>& columns)
        : text_(text), columns_(columns) {}

    const std::string& text_;
    const std::vector<std::string>& columns_;
    size_t pos_ = 0;
    std::vector<size_t> refs_;

    using expr_node = std::unique_ptr<compiled_expr::node>;
    using op = compiled_expr::op;

    static expr_node make(op kind, expr_node a = nullptr, expr_node b = nullptr) {
        auto n = std::make_unique<compiled_expr::node>();
        n->kind = kind;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    expr_node parse_expr() {
        auto lhs = parse_term();
        while (true) {
            if (eat('+')) lhs = make(op::add, std::move(lhs), parse_term());
            else if (eat('-')) lhs = make(op::sub, std::move(lhs), parse_term());
            else return lhs;
        }
    }

    expr_node parse_term() {
        auto lhs = parse_unary();
        while (true) {
            if (eat('*')) lhs = make(op::mul, std::move(lhs), parse_unary());
            else if (eat('/')) lhs = make(op::div, std::move(lhs), parse_unary());
            else return lhs;
        }
    }

    expr_node parse_unary() {
        if (eat('-')) return make(op::neg, parse_unary());
        return parse_primary();
    }

    expr_node parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw catalog_error("unexpected end of expression in '" + text_ + "'");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            if (!eat(')')) throw catalog_error("missing ')' in '" + text_ + "'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw catalog_error(std::string("unexpected character '") + c + "' in '" + text_ + "'");
    }

    expr_node parse_number() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == 'e' || text_[pos_] == 'E' ||
                ((text_[pos_] == '+' || text_[pos_] == '-') &&
                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
            ++pos_;
        auto n = make(op::number);
        try {
            n->value = std::stod(text_.substr(start, pos_ - start));
        } catch (const std::exception&) {
            throw catalog_error("bad numeric literal in '" + text_ + "'");
        }
        return n;
    }

    expr_node parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);

        if (peek() == '(') {
            ++pos_;
            op kind;
            int arity;
            if (name == "abs") { kind = op::abs; arity = 1; }
            else if (name == "log") { kind = op::log; arity = 1; }
            else if (name == "sqrt") { kind = op::sqrt; arity = 1; }
            else if (name == "min") { kind = op::min; arity = 2; }
            else if (name == "max") { kind = op::max; arity = 2; }
            else throw catalog_error("unknown function '" + name + "'");
            auto a = parse_expr();
            expr_node b;
            if (arity == 2) {
                if (!eat(',')) throw catalog_error("'" + name + "' expects two arguments");
                b = parse_expr();
            }
            if (!eat(')')) throw catalog_error("missing ')' after '" + name + "(...'");
            return make(kind, std::move(a), std::move(b));
        }

        for (size_t i = 0; i < columns_.size(); ++i) {
            if (columns_[i] == name) {
                auto n = make(op::column);
                n->column = i;
                refs_.push_back(i);
                return n;
            }
        }
        throw catalog_error("unknown column '" + name + "'");
    }
};

} // namespace lesionboost
