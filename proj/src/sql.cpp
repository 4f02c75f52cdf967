#include "synergy/sql.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "synergy/errors.hpp"

namespace synergy::sql {

std::string_view op_symbol(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Lt: return "<";
        case CompareOp::Gt: return ">";
        case CompareOp::Le: return "<=";
        case CompareOp::Ge: return ">=";
    }
    return "=";
}

bool compare(const Value& lhs, CompareOp op, const Value& rhs) {
    auto c = compare_values(lhs, rhs);
    if (!c) return false;
    switch (op) {
        case CompareOp::Eq: return *c == 0;
        case CompareOp::Lt: return *c < 0;
        case CompareOp::Gt: return *c > 0;
        case CompareOp::Le: return *c <= 0;
        case CompareOp::Ge: return *c >= 0;
    }
    return false;
}

const TableRef* Statement::find_alias(std::string_view alias) const {
    for (const auto& t : tables) {
        if (t.alias == alias) return &t;
    }
    return nullptr;
}

const TableRef* Statement::resolve(const ColumnRef& ref) const {
    if (ref.qualifier.empty()) return tables.size() == 1 ? &tables.front() : nullptr;
    return find_alias(ref.qualifier);
}

std::size_t Statement::placeholder_count() const {
    std::size_t n = 0;
    auto count = [&n](const Operand& op) {
        if (auto* p = std::get_if<Placeholder>(&op)) n = std::max(n, p->index + 1);
    };
    for (const auto& f : filters) count(f.operand);
    for (const auto& a : assignments) count(a.value);
    for (const auto& v : values) count(v.value);
    return n;
}

namespace {

enum class Tok { Ident, Int, String, Symbol, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::toupper(static_cast<unsigned char>(x)) ==
                      std::toupper(static_cast<unsigned char>(y));
           });
}

constexpr std::array kReserved = {
    "SELECT", "FROM",  "WHERE",  "AND",   "OR",     "NOT",    "AS",     "INSERT", "INTO",
    "VALUES", "UPDATE", "SET",   "DELETE", "JOIN",  "ON",     "GROUP",  "ORDER",  "BY",
    "HAVING", "LIMIT", "UNION",  "NULL",  "IN",     "EXISTS", "LIKE",   "BETWEEN", "DISTINCT",
    "INNER",  "LEFT",  "RIGHT",  "OUTER", "CROSS",  "NATURAL", "USING", "OFFSET",
};

bool is_reserved(std::string_view word) {
    return std::any_of(kReserved.begin(), kReserved.end(),
                       [&](const char* kw) { return iequals(word, kw); });
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token tok;
            tok.line = line_;
            tok.column = column_;
            if (pos_ >= text_.size()) {
                tok.kind = Tok::End;
                out.push_back(tok);
                return out;
            }
            char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                tok.kind = Tok::Ident;
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                    tok.text += advance();
                }
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && pos_ + 1 < text_.size() &&
                        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
                tok.kind = Tok::Int;
                tok.text += advance();
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    tok.text += advance();
                }
            } else if (c == '\'') {
                tok.kind = Tok::String;
                advance();
                for (;;) {
                    if (pos_ >= text_.size()) {
                        throw SyntaxError("unterminated string literal", tok.line, tok.column);
                    }
                    char ch = advance();
                    if (ch == '\'') {
                        if (pos_ < text_.size() && text_[pos_] == '\'') {
                            tok.text += advance();
                            continue;
                        }
                        break;
                    }
                    tok.text += ch;
                }
            } else {
                tok.kind = Tok::Symbol;
                tok.text += advance();
                if (pos_ < text_.size()) {
                    std::string two = tok.text + text_[pos_];
                    if (two == "<=" || two == ">=" || two == "<>" || two == "!=") {
                        tok.text += advance();
                    }
                }
                static constexpr std::string_view kSymbols = ",.()=<>*?;";
                if (tok.text.size() == 1 && kSymbols.find(tok.text[0]) == std::string_view::npos) {
                    throw SyntaxError("unexpected character '" + tok.text + "'", tok.line, tok.column);
                }
            }
            out.push_back(std::move(tok));
        }
    }

private:
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(Lexer(text).run()) {}

    Statement parse() {
        const Token& first = peek();
        Statement stmt;
        if (is_kw(first, "SELECT")) {
            stmt = parse_select();
        } else if (is_kw(first, "INSERT")) {
            stmt = parse_insert();
        } else if (is_kw(first, "UPDATE")) {
            stmt = parse_update();
        } else if (is_kw(first, "DELETE")) {
            stmt = parse_delete();
        } else {
            fail(first, "expected SELECT, INSERT, UPDATE or DELETE");
        }
        if (peek().kind == Tok::Symbol && peek().text == ";") next();
        if (peek().kind != Tok::End) unexpected(peek());
        return stmt;
    }

private:
    [[noreturn]] void fail(const Token& tok, const std::string& message) const {
        throw SyntaxError(message, tok.line, tok.column);
    }

    [[noreturn]] void unexpected(const Token& tok) const {
        if (tok.kind == Tok::End) fail(tok, "unexpected end of statement");
        if (tok.kind == Tok::Ident) {
            if (is_kw(tok, "OR")) fail(tok, "OR is not supported");
            if (is_kw(tok, "GROUP") || is_kw(tok, "ORDER") || is_kw(tok, "HAVING") ||
                is_kw(tok, "LIMIT") || is_kw(tok, "UNION")) {
                fail(tok, "unsupported clause " + tok.text);
            }
            if (is_kw(tok, "JOIN") || is_kw(tok, "INNER") || is_kw(tok, "LEFT") ||
                is_kw(tok, "RIGHT") || is_kw(tok, "OUTER") || is_kw(tok, "CROSS") ||
                is_kw(tok, "NATURAL")) {
                fail(tok, "explicit JOIN syntax is not supported");
            }
        }
        if (tok.kind == Tok::Symbol && tok.text == "(") fail(tok, "subqueries are not supported");
        fail(tok, "unexpected '" + tok.text + "'");
    }

    static bool is_kw(const Token& tok, std::string_view kw) {
        return tok.kind == Tok::Ident && iequals(tok.text, kw);
    }

    bool is_symbol(std::string_view s) const {
        return peek().kind == Tok::Symbol && peek().text == s;
    }

    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

    void expect_kw(std::string_view kw) {
        if (!is_kw(peek(), kw)) {
            if (peek().kind == Tok::End || peek().kind == Tok::Symbol) {
                fail(peek(), "expected " + std::string(kw));
            }
            unexpected(peek());
        }
        next();
    }

    void expect_symbol(std::string_view s) {
        if (!is_symbol(s)) {
            if (is_kw(peek(), "OR")) unexpected(peek());
            fail(peek(), "expected '" + std::string(s) + "'");
        }
        next();
    }

    std::string identifier(const char* what) {
        const Token& tok = peek();
        if (tok.kind != Tok::Ident) fail(tok, std::string("expected ") + what);
        next();
        return tok.text;
    }

    // Relation names may collide with reserved words (e.g. a relation named Order).
    std::string relation_name() { return identifier("relation name"); }

    ColumnRef column_ref() {
        const Token& tok = peek();
        if (tok.kind != Tok::Ident || is_reserved(tok.text)) {
            if (tok.kind == Tok::Symbol && tok.text == "(") unexpected(tok);
            fail(tok, "expected column reference");
        }
        ColumnRef ref;
        ref.name = next().text;
        if (is_symbol(".")) {
            next();
            ref.qualifier = std::move(ref.name);
            ref.name = identifier("column name");
        }
        return ref;
    }

    Operand operand() {
        const Token& tok = peek();
        if (tok.kind == Tok::Int) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
            if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
                fail(tok, "integer literal out of range");
            }
            next();
            return Value{v};
        }
        if (tok.kind == Tok::String) {
            next();
            return Value{tok.text};
        }
        if (tok.kind == Tok::Symbol && tok.text == "?") {
            next();
            return Placeholder{placeholders_++};
        }
        if (is_kw(tok, "NULL")) fail(tok, "NULL literals are not supported");
        if (tok.kind == Tok::Symbol && tok.text == "(") fail(tok, "subqueries are not supported");
        fail(tok, "expected literal or '?'");
    }

    std::optional<CompareOp> compare_op() {
        const Token& tok = peek();
        if (tok.kind != Tok::Symbol) return std::nullopt;
        if (tok.text == "=") return CompareOp::Eq;
        if (tok.text == "<") return CompareOp::Lt;
        if (tok.text == ">") return CompareOp::Gt;
        if (tok.text == "<=") return CompareOp::Le;
        if (tok.text == ">=") return CompareOp::Ge;
        if (tok.text == "<>" || tok.text == "!=") fail(tok, "inequality predicates are not supported");
        return std::nullopt;
    }

    void conditions(Statement& stmt) {
        for (;;) {
            const Token& start = peek();
            ColumnRef lhs = column_ref();
            auto op = compare_op();
            if (!op) {
                if (is_kw(peek(), "OR")) unexpected(peek());
                if (is_kw(peek(), "IN") || is_kw(peek(), "LIKE") || is_kw(peek(), "BETWEEN") ||
                    is_kw(peek(), "IS") || is_kw(peek(), "NOT")) {
                    fail(peek(), "unsupported predicate " + peek().text);
                }
                fail(peek(), "expected comparison operator");
            }
            const Token& op_tok = next();
            if (peek().kind == Tok::Ident && !is_kw(peek(), "NULL")) {
                ColumnRef rhs = column_ref();
                if (*op != CompareOp::Eq) fail(op_tok, "non-equi joins are not supported");
                if (lhs.qualifier.empty() || rhs.qualifier.empty()) {
                    fail(start, "join conditions must use qualified column references");
                }
                if (lhs.qualifier == rhs.qualifier) {
                    fail(start, "join condition must reference two distinct aliases");
                }
                stmt.joins.push_back({std::move(lhs), std::move(rhs)});
            } else {
                stmt.filters.push_back({std::move(lhs), *op, operand()});
            }
            if (is_kw(peek(), "AND")) {
                next();
                continue;
            }
            break;
        }
    }

    void check_refs(const Statement& stmt, const Token& at) const {
        auto check = [&](const ColumnRef& ref) {
            if (ref.qualifier.empty()) {
                if (stmt.tables.size() > 1) {
                    fail(at, "column '" + ref.name + "' must be qualified in a multi-table query");
                }
                return;
            }
            if (!stmt.find_alias(ref.qualifier)) {
                fail(at, "unknown alias '" + ref.qualifier + "'");
            }
        };
        for (const auto& p : stmt.projections) check(p);
        for (const auto& j : stmt.joins) {
            check(j.left);
            check(j.right);
        }
        for (const auto& f : stmt.filters) check(f.column);
    }

    Statement parse_select() {
        const Token& start = next();
        Statement stmt;
        stmt.kind = StatementKind::SelectJoin;
        if (is_symbol("*")) {
            next();
        } else {
            if (is_kw(peek(), "DISTINCT")) fail(peek(), "DISTINCT is not supported");
            for (;;) {
                stmt.projections.push_back(column_ref());
                if (is_symbol("(")) fail(peek(), "function calls are not supported");
                if (!is_symbol(",")) break;
                next();
            }
        }
        expect_kw("FROM");
        for (;;) {
            if (is_symbol("(")) unexpected(peek());
            TableRef ref;
            ref.relation = relation_name();
            if (is_kw(peek(), "AS")) {
                next();
                ref.alias = identifier("alias");
                if (is_reserved(ref.alias)) fail(peek(), "alias may not be a reserved word");
            } else if (peek().kind == Tok::Ident && !is_reserved(peek().text)) {
                ref.alias = next().text;
            } else {
                ref.alias = ref.relation;
            }
            if (stmt.find_alias(ref.alias)) fail(peek(), "duplicate alias '" + ref.alias + "'");
            stmt.tables.push_back(std::move(ref));
            if (!is_symbol(",")) break;
            next();
        }
        if (is_kw(peek(), "WHERE")) {
            next();
            conditions(stmt);
        }
        check_refs(stmt, start);
        return stmt;
    }

    void single_table_refs(Statement& stmt, const Token& at) const {
        const std::string& rel = stmt.tables.front().relation;
        for (const auto& f : stmt.filters) {
            if (!f.column.qualifier.empty() && f.column.qualifier != rel) {
                fail(at, "unknown alias '" + f.column.qualifier + "'");
            }
        }
        if (!stmt.joins.empty()) fail(at, "joins are not allowed in write statements");
    }

    Statement parse_insert() {
        const Token& start = next();
        expect_kw("INTO");
        Statement stmt;
        stmt.kind = StatementKind::Insert;
        std::string rel = relation_name();
        stmt.tables.push_back({rel, rel});
        expect_symbol("(");
        std::vector<std::string> columns;
        for (;;) {
            columns.push_back(identifier("column name"));
            if (!is_symbol(",")) break;
            next();
        }
        expect_symbol(")");
        expect_kw("VALUES");
        expect_symbol("(");
        std::vector<Operand> vals;
        for (;;) {
            vals.push_back(operand());
            if (!is_symbol(",")) break;
            next();
        }
        expect_symbol(")");
        if (vals.size() != columns.size()) fail(start, "column count does not match value count");
        for (std::size_t i = 0; i < columns.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (columns[j] == columns[i]) fail(start, "duplicate column '" + columns[i] + "'");
            }
            stmt.values.push_back({columns[i], std::move(vals[i])});
        }
        return stmt;
    }

    Statement parse_update() {
        const Token& start = next();
        Statement stmt;
        stmt.kind = StatementKind::Update;
        std::string rel = relation_name();
        stmt.tables.push_back({rel, rel});
        expect_kw("SET");
        for (;;) {
            std::string col = identifier("column name");
            expect_symbol("=");
            stmt.assignments.push_back({std::move(col), operand()});
            if (!is_symbol(",")) break;
            next();
        }
        expect_kw("WHERE");
        conditions(stmt);
        single_table_refs(stmt, start);
        return stmt;
    }

    Statement parse_delete() {
        const Token& start = next();
        expect_kw("FROM");
        Statement stmt;
        stmt.kind = StatementKind::Delete;
        std::string rel = relation_name();
        stmt.tables.push_back({rel, rel});
        expect_kw("WHERE");
        conditions(stmt);
        single_table_refs(stmt, start);
        return stmt;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t placeholders_ = 0;
};

std::string render_operand(const Operand& op) {
    if (std::holds_alternative<Placeholder>(op)) return "?";
    return sql_literal(std::get<Value>(op));
}

void render_where(std::ostringstream& out, const Statement& stmt) {
    bool first = true;
    auto sep = [&] {
        out << (first ? " WHERE " : " AND ");
        first = false;
    };
    for (const auto& j : stmt.joins) {
        sep();
        out << j.left.str() << " = " << j.right.str();
    }
    for (const auto& f : stmt.filters) {
        sep();
        out << f.column.str() << ' ' << op_symbol(f.op) << ' ' << render_operand(f.operand);
    }
}

}  // namespace

Statement parse_statement(std::string_view text) { return Parser(text).parse(); }

std::string render_statement(const Statement& stmt) {
    std::ostringstream out;
    switch (stmt.kind) {
        case StatementKind::SelectJoin: {
            out << "SELECT ";
            if (stmt.is_star()) {
                out << '*';
            } else {
                for (std::size_t i = 0; i < stmt.projections.size(); ++i) {
                    if (i) out << ", ";
                    out << stmt.projections[i].str();
                }
            }
            out << " FROM ";
            for (std::size_t i = 0; i < stmt.tables.size(); ++i) {
                if (i) out << ", ";
                out << stmt.tables[i].relation;
                if (stmt.tables[i].alias != stmt.tables[i].relation) {
                    out << " AS " << stmt.tables[i].alias;
                }
            }
            render_where(out, stmt);
            break;
        }
        case StatementKind::Insert: {
            out << "INSERT INTO " << stmt.target() << " (";
            for (std::size_t i = 0; i < stmt.values.size(); ++i) {
                if (i) out << ", ";
                out << stmt.values[i].column;
            }
            out << ") VALUES (";
            for (std::size_t i = 0; i < stmt.values.size(); ++i) {
                if (i) out << ", ";
                out << render_operand(stmt.values[i].value);
            }
            out << ')';
            break;
        }
        case StatementKind::Update: {
            out << "UPDATE " << stmt.target() << " SET ";
            for (std::size_t i = 0; i < stmt.assignments.size(); ++i) {
                if (i) out << ", ";
                out << stmt.assignments[i].column << " = "
                    << render_operand(stmt.assignments[i].value);
            }
            render_where(out, stmt);
            break;
        }
        case StatementKind::Delete:
            out << "DELETE FROM " << stmt.target();
            render_where(out, stmt);
            break;
    }
    return out.str();
}

Statement bind(const Statement& stmt, std::span<const Value> params) {
    Statement out = stmt;
    auto fill = [&](Operand& op) {
        if (auto* p = std::get_if<Placeholder>(&op)) {
            if (p->index >= params.size()) {
                throw InvalidStatement("missing value for placeholder " + std::to_string(p->index + 1));
            }
            if (is_null(params[p->index])) throw InvalidStatement("NULL parameter values are not supported");
            op = params[p->index];
        }
    };
    for (auto& f : out.filters) fill(f.operand);
    for (auto& a : out.assignments) fill(a.value);
    for (auto& v : out.values) fill(v.value);
    return out;
}

std::vector<Statement> parse_workload(std::string_view text) {
    std::vector<Statement> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        // strip '#' comments outside string literals
        bool in_string = false;
        std::size_t cut = line.size();
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '\'') in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                cut = i;
                break;
            }
        }
        line = line.substr(0, cut);
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(parse_statement(line));
        } catch (const SyntaxError& e) {
            throw SyntaxError(e.message(), static_cast<int>(line_no), e.column());
        }
    }
    return out;
}

std::vector<Statement> load_workload_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open workload file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_workload(buf.str());
}

}  // namespace synergy::sql
