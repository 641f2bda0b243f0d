#include "mas/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "mas/error.hpp"

namespace mas {

namespace {

class TomlParser {
public:
    explicit TomlParser(const std::string& text) : s_(text) {}

    nlohmann::json parse()
    {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                if (peek() == '[') fail("arrays of tables are not supported");
                skip_ws();
                const auto path = parse_key_path();
                skip_ws();
                expect(']');
                table = &root;
                for (const auto& k : path) {
                    auto& next = (*table)[k];
                    if (next.is_null()) next = nlohmann::json::object();
                    if (!next.is_object()) fail("key '" + k + "' is not a table");
                    table = &next;
                }
                if (!defined_tables_.insert(join(path)).second) fail("table [" + join(path) + "] defined twice");
            } else {
                parse_key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error("config line " + std::to_string(line_) + ": " + msg);
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get()
    {
        if (eof()) fail("unexpected end of input");
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    void expect(char c)
    {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }

    void skip_ws()
    {
        while (peek() == ' ' || peek() == '\t') ++pos_;
    }

    void skip_comment()
    {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }

    void skip_ws_comments_newlines()
    {
        while (true) {
            skip_ws();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }

    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected text after value");
        get();
    }

    static std::string join(const std::vector<std::string>& path)
    {
        std::string out;
        for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
        return out;
    }

    std::string parse_simple_key()
    {
        if (peek() == '"') return parse_basic_string();
        if (peek() == '\'') return parse_literal_string();
        std::string key;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key.push_back(c);
                ++pos_;
            } else {
                break;
            }
        }
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> parse_key_path()
    {
        std::vector<std::string> path{parse_simple_key()};
        while (true) {
            skip_ws();
            if (peek() != '.') break;
            ++pos_;
            skip_ws();
            path.push_back(parse_simple_key());
        }
        return path;
    }

    void parse_key_value(nlohmann::json& table)
    {
        const auto path = parse_key_path();
        skip_ws();
        expect('=');
        skip_ws();
        nlohmann::json* target = &table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            auto& next = (*target)[path[i]];
            if (next.is_null()) next = nlohmann::json::object();
            if (!next.is_object()) fail("key '" + path[i] + "' is not a table");
            target = &next;
        }
        if (target->contains(path.back())) fail("duplicate key '" + join(path) + "'");
        (*target)[path.back()] = parse_value();
    }

    nlohmann::json parse_value()
    {
        const char c = peek();
        if (c == '"') return parse_basic_string();
        if (c == '\'') return parse_literal_string();
        if (c == '[') return parse_array();
        if (c == '{') return parse_inline_table();
        return parse_scalar();
    }

    std::string parse_basic_string()
    {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            c = get();
            switch (c) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'u': {
                if (pos_ + 4 > s_.size()) fail("bad unicode escape");
                const unsigned long cp = std::stoul(s_.substr(pos_, 4), nullptr, 16);
                pos_ += 4;
                append_utf8(out, cp);
                break;
            }
            default: fail(std::string("unknown escape \\") + c);
            }
        }
        return out;
    }

    static void append_utf8(std::string& out, unsigned long cp)
    {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        } else {
            out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
        }
    }

    std::string parse_literal_string()
    {
        expect('\'');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') break;
            out.push_back(c);
        }
        return out;
    }

    nlohmann::json parse_array()
    {
        expect('[');
        auto arr = nlohmann::json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                get();
                continue;
            }
            skip_ws_comments_newlines();
            expect(']');
            return arr;
        }
    }

    nlohmann::json parse_inline_table()
    {
        expect('{');
        auto obj = nlohmann::json::object();
        skip_ws();
        if (peek() == '}') {
            get();
            return obj;
        }
        while (true) {
            skip_ws();
            parse_key_value(obj);
            skip_ws();
            if (peek() == ',') {
                get();
                continue;
            }
            expect('}');
            return obj;
        }
    }

    nlohmann::json parse_scalar()
    {
        std::string tok;
        while (!eof()) {
            const char c = peek();
            if (c == ',' || c == ']' || c == '}' || c == '#' || c == ' ' || c == '\t' || c == '\n' || c == '\r')
                break;
            tok.push_back(c);
            ++pos_;
        }
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
        if (tok == "-inf") return -std::numeric_limits<double>::infinity();
        if (tok == "nan" || tok == "+nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();

        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] == '_') {
                if (i == 0 || i + 1 == tok.size() || !std::isxdigit(static_cast<unsigned char>(tok[i - 1])) ||
                    !std::isxdigit(static_cast<unsigned char>(tok[i + 1])))
                    fail("misplaced underscore in '" + tok + "'");
                continue;
            }
            clean.push_back(tok[i]);
        }
        try {
            std::size_t used = 0;
            if (clean.rfind("0x", 0) == 0) {
                const auto v = std::stoull(clean.substr(2), &used, 16);
                if (used + 2 == clean.size()) return v;
            } else if (clean.find_first_of(".eE") == std::string::npos) {
                if (clean[0] == '-') {
                    const auto v = std::stoll(clean, &used, 10);
                    if (used == clean.size()) return v;
                } else {
                    const auto v = std::stoull(clean[0] == '+' ? clean.substr(1) : clean, &used, 10);
                    if (used + (clean[0] == '+' ? 1 : 0) == clean.size()) return v;
                }
            } else {
                const double v = std::stod(clean, &used);
                if (used == clean.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("invalid value '" + tok + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::set<std::string> defined_tables_;
};

} // namespace

nlohmann::json parse_toml(const std::string& text)
{
    return TomlParser(text).parse();
}

nlohmann::json load_toml_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

void merge_json(nlohmann::json& base, const nlohmann::json& patch)
{
    if (!base.is_object() || !patch.is_object()) {
        base = patch;
        return;
    }
    for (const auto& [k, v] : patch.items()) {
        if (base.contains(k) && base[k].is_object() && v.is_object())
            merge_json(base[k], v);
        else
            base[k] = v;
    }
}

} // namespace mas
