#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pblb {

/// Minimal JSON document builder for reports. Object keys keep insertion
/// order and doubles always serialize with 17 significant digits, so equal
/// inputs produce byte-identical output regardless of threading.
class Json {
public:
    Json() : type_(Type::null) {}

    static Json null() { return Json(); }
    static Json boolean(bool b) {
        Json j;
        j.type_ = Type::boolean;
        j.bool_ = b;
        return j;
    }
    static Json number(double v) {
        Json j;
        j.type_ = Type::number;
        j.num_ = v;
        return j;
    }
    static Json integer(long long v) {
        Json j;
        j.type_ = Type::integer;
        j.int_ = v;
        return j;
    }
    static Json str(std::string s) {
        Json j;
        j.type_ = Type::string;
        j.str_ = std::move(s);
        return j;
    }
    static Json array() {
        Json j;
        j.type_ = Type::array;
        return j;
    }
    static Json array(const std::vector<double>& v) {
        Json j = array();
        for (double x : v) j.push(number(x));
        return j;
    }
    static Json object() {
        Json j;
        j.type_ = Type::object;
        return j;
    }

    void push(Json v) { items_.push_back(std::move(v)); }
    Json& set(const std::string& key, Json v) {
        for (auto& kv : members_)
            if (kv.first == key) {
                kv.second = std::move(v);
                return kv.second;
            }
        members_.emplace_back(key, std::move(v));
        return members_.back().second;
    }

    static std::string format_double(double v) {
        if (std::isnan(v)) return "\"nan\"";
        if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

private:
    enum class Type { null, boolean, number, integer, string, array, object };

    static void write_escaped(std::string& out, const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out += buf;
                    } else
                        out += c;
            }
        }
        out += '"';
    }

    void write(std::string& out) const {
        switch (type_) {
            case Type::null: out += "null"; break;
            case Type::boolean: out += bool_ ? "true" : "false"; break;
            case Type::number: out += format_double(num_); break;
            case Type::integer: out += std::to_string(int_); break;
            case Type::string: write_escaped(out, str_); break;
            case Type::array: {
                out += '[';
                for (std::size_t i = 0; i < items_.size(); ++i) {
                    if (i) out += ',';
                    items_[i].write(out);
                }
                out += ']';
                break;
            }
            case Type::object: {
                out += '{';
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    if (i) out += ',';
                    write_escaped(out, members_[i].first);
                    out += ':';
                    members_[i].second.write(out);
                }
                out += '}';
                break;
            }
        }
    }

    Type type_;
    bool bool_ = false;
    double num_ = 0.0;
    long long int_ = 0;
    std::string str_;
    std::vector<Json> items_;
    std::vector<std::pair<std::string, Json>> members_;
};

}  // namespace pblb
