/*
 * Reader for the small TOML subset used by model and run files:
 *   key = "string" | 'string' | integer | float | true | false | [array]
 *   [table]  [table.sub]  [[array_of_tables]]
 *   # comments
 * Arrays may nest and span lines. Keys are bare (A-Za-z0-9_-).
 */
#pragma once

#include "errors.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kmslab::toml {

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array, std::shared_ptr<Table>, std::vector<std::shared_ptr<Table>>> v;

    bool is_string() const { return std::holds_alternative<std::string>(v); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
    bool is_number() const { return is_int() || std::holds_alternative<double>(v); }
    bool is_bool() const { return std::holds_alternative<bool>(v); }
    bool is_array() const { return std::holds_alternative<Array>(v); }
    bool is_table() const { return std::holds_alternative<std::shared_ptr<Table>>(v); }
    bool is_table_array() const { return std::holds_alternative<std::vector<std::shared_ptr<Table>>>(v); }

    const std::string& as_string() const { return std::get<std::string>(v); }
    std::int64_t as_int() const { return std::get<std::int64_t>(v); }
    double as_number() const { return is_int() ? static_cast<double>(as_int()) : std::get<double>(v); }
    bool as_bool() const { return std::get<bool>(v); }
    const Array& as_array() const { return std::get<Array>(v); }
    const Table& as_table() const { return *std::get<std::shared_ptr<Table>>(v); }
    const std::vector<std::shared_ptr<Table>>& as_table_array() const {
        return std::get<std::vector<std::shared_ptr<Table>>>(v);
    }
};

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Table parse() {
        auto root = std::make_shared<Table>();
        Table* current = root.get();
        for (;;) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                bool array = s_.substr(pos_, 2) == "[[";
                pos_ += array ? 2 : 1;
                std::vector<std::string> path = dotted_key();
                skip_ws();
                if (array) expect(']');
                expect(']');
                end_of_line();
                current = open_table(*root, path, array);
                continue;
            }
            std::string key = bare_key();
            skip_ws();
            expect('=');
            skip_ws();
            Value v = value();
            end_of_line();
            if (current->count(key)) fail("duplicate key '" + key + "'");
            (*current)[key] = std::move(v);
        }
        return std::move(*root);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        int line = 1, col = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
            if (s_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(what, line, col);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_blank_lines() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
                continue;
            }
            return;
        }
    }
    void skip_space_and_newlines() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') ++pos_;
            else return;
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') ++pos_;
        if (peek() != '\n') fail("unexpected text after value");
        ++pos_;
    }

    std::string bare_key() {
        std::size_t b = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
        if (b == pos_) fail("expected a key");
        return std::string(s_.substr(b, pos_ - b));
    }

    std::vector<std::string> dotted_key() {
        std::vector<std::string> parts;
        skip_ws();
        parts.push_back(bare_key());
        while (peek() == '.') {
            ++pos_;
            parts.push_back(bare_key());
        }
        return parts;
    }

    Table* open_table(Table& root, const std::vector<std::string>& path, bool array) {
        Table* t = &root;
        for (std::size_t k = 0; k < path.size(); ++k) {
            const bool last = k + 1 == path.size();
            auto it = t->find(path[k]);
            if (last && array) {
                if (it == t->end()) it = t->emplace(path[k], Value{std::vector<std::shared_ptr<Table>>{}}).first;
                if (!it->second.is_table_array()) fail("'" + path[k] + "' is not an array of tables");
                auto& vec = std::get<std::vector<std::shared_ptr<Table>>>(it->second.v);
                vec.push_back(std::make_shared<Table>());
                return vec.back().get();
            }
            if (it == t->end()) it = t->emplace(path[k], Value{std::make_shared<Table>()}).first;
            if (it->second.is_table_array()) {
                t = std::get<std::vector<std::shared_ptr<Table>>>(it->second.v).back().get();
            } else if (it->second.is_table()) {
                t = std::get<std::shared_ptr<Table>>(it->second.v).get();
            } else {
                fail("'" + path[k] + "' is not a table");
            }
        }
        return t;
    }

    Value value() {
        char c = peek();
        if (c == '"' || c == '\'') return Value{string_literal()};
        if (c == '[') {
            ++pos_;
            Array a;
            skip_space_and_newlines();
            while (peek() != ']') {
                a.push_back(value());
                skip_space_and_newlines();
                if (peek() == ',') {
                    ++pos_;
                    skip_space_and_newlines();
                } else if (peek() != ']') {
                    fail("expected ',' or ']'");
                }
            }
            ++pos_;
            return Value{std::move(a)};
        }
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return Value{true};
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return Value{false};
        }
        return number();
    }

    std::string string_literal() {
        char q = peek();
        ++pos_;
        std::string out;
        while (!eof() && peek() != q) {
            char c = s_[pos_++];
            if (c == '\n') fail("unterminated string");
            if (c == '\\' && q == '"') {
                char e = peek();
                ++pos_;
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail("unsupported escape");
                }
                continue;
            }
            out += c;
        }
        if (eof()) fail("unterminated string");
        ++pos_;
        return out;
    }

    Value number() {
        std::size_t b = pos_;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.' || peek() == '_'))
            ++pos_;
        std::string t;
        for (char c : s_.substr(b, pos_ - b))
            if (c != '_') t += c;
        if (t.empty()) {
            pos_ = b;
            fail("expected a value");
        }
        const char* first = t.data() + (t[0] == '+' ? 1 : 0);
        const char* last = t.data() + t.size();
        if (t.find_first_of(".eE") == std::string::npos || t == "inf" || t == "nan") {
            std::int64_t i = 0;
            auto r = std::from_chars(first, last, i);
            if (r.ec == std::errc() && r.ptr == last) return Value{i};
        }
        double d = 0;
        auto r = std::from_chars(first, last, d);
        if (r.ec != std::errc() || r.ptr != last) {
            pos_ = b;
            fail("invalid number '" + t + "'");
        }
        return Value{d};
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline Table parse(std::string_view text) { return Parser(text).parse(); }

inline Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace kmslab::toml
