#pragma once
// ============================================================================
// Deterministic JSON output and configuration digests.
//
// Result payloads must be byte-identical across runs, so they are emitted by
// a small writer with fixed rules instead of a general-purpose serializer:
//   * object keys are emitted in sorted order,
//   * doubles are printed with %.17g (round-trip exact for IEEE binary64),
//   * no insignificant whitespace.
// Parsing of input configs uses nlohmann::json; the digest is an FNV-1a hash
// of the canonical re-dump of the parsed value, so it is insensitive to key
// order and whitespace in the source file.
// ============================================================================

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace compasskit::jsonio {

// --------------------------------------------------------------------------
// JValue: a minimal JSON tree that dumps deterministically
// --------------------------------------------------------------------------

class JValue {
public:
    enum class Kind { Null, Bool, Int, Double, String, Array, Object };

    JValue() : kind_(Kind::Null) {}
    static JValue null() { return JValue(); }
    static JValue boolean(bool b) {
        JValue v;
        v.kind_ = Kind::Bool;
        v.bool_ = b;
        return v;
    }
    static JValue integer(long long i) {
        JValue v;
        v.kind_ = Kind::Int;
        v.int_ = i;
        return v;
    }
    static JValue number(double d) {
        JValue v;
        v.kind_ = Kind::Double;
        v.dbl_ = d;
        return v;
    }
    static JValue string(std::string s) {
        JValue v;
        v.kind_ = Kind::String;
        v.str_ = std::move(s);
        return v;
    }
    static JValue array() {
        JValue v;
        v.kind_ = Kind::Array;
        return v;
    }
    static JValue object() {
        JValue v;
        v.kind_ = Kind::Object;
        return v;
    }

    Kind kind() const { return kind_; }

    JValue& push(JValue item) {
        require(Kind::Array, "push");
        items_.push_back(std::move(item));
        return *this;
    }
    JValue& set(const std::string& key, JValue value) {
        require(Kind::Object, "set");
        fields_[key] = std::move(value);
        return *this;
    }
    bool has(const std::string& key) const {
        require(Kind::Object, "has");
        return fields_.count(key) != 0;
    }
    const JValue& at(const std::string& key) const {
        require(Kind::Object, "at");
        auto it = fields_.find(key);
        if (it == fields_.end()) throw std::out_of_range("JValue: missing key " + key);
        return it->second;
    }
    std::size_t size() const {
        return kind_ == Kind::Array ? items_.size() : fields_.size();
    }

    // Deterministic serialization (see header comment for the rules).
    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

private:
    void require(Kind k, const char* op) const {
        if (kind_ != k) throw std::logic_error(std::string("JValue: ") + op + " on wrong kind");
    }

    static void write_escaped(std::string& out, const std::string& s) {
        out += '"';
        for (unsigned char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\b': out += "\\b"; break;
                case '\f': out += "\\f"; break;
                case '\n': out += "\\n"; break;
                case '\r': out += "\\r"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (c < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out += static_cast<char>(c);
                    }
            }
        }
        out += '"';
    }

    static void write_double(std::string& out, double d) {
        if (std::isnan(d)) {
            out += "\"nan\"";  // JSON has no NaN literal; keep it greppable
            return;
        }
        if (std::isinf(d)) {
            out += d > 0 ? "\"inf\"" : "\"-inf\"";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", d);
        out += buf;
    }

    void write(std::string& out) const {
        switch (kind_) {
            case Kind::Null: out += "null"; break;
            case Kind::Bool: out += bool_ ? "true" : "false"; break;
            case Kind::Int: out += std::to_string(int_); break;
            case Kind::Double: write_double(out, dbl_); break;
            case Kind::String: write_escaped(out, str_); break;
            case Kind::Array: {
                out += '[';
                bool first = true;
                for (const auto& item : items_) {
                    if (!first) out += ',';
                    first = false;
                    item.write(out);
                }
                out += ']';
                break;
            }
            case Kind::Object: {
                out += '{';
                bool first = true;
                for (const auto& [key, value] : fields_) {  // std::map: sorted
                    if (!first) out += ',';
                    first = false;
                    write_escaped(out, key);
                    out += ':';
                    value.write(out);
                }
                out += '}';
                break;
            }
        }
    }

    Kind kind_;
    bool bool_ = false;
    long long int_ = 0;
    double dbl_ = 0.0;
    std::string str_;
    std::vector<JValue> items_;
    std::map<std::string, JValue> fields_;
};

// Convenience builders for numeric arrays.
inline JValue array_of(const std::vector<double>& xs) {
    JValue a = JValue::array();
    for (double x : xs) a.push(JValue::number(x));
    return a;
}
inline JValue array_of(const std::vector<int>& xs) {
    JValue a = JValue::array();
    for (int x : xs) a.push(JValue::integer(x));
    return a;
}
inline JValue array_of(const std::vector<std::string>& xs) {
    JValue a = JValue::array();
    for (const auto& x : xs) a.push(JValue::string(x));
    return a;
}

// --------------------------------------------------------------------------
// Canonical form of a parsed config + FNV-1a digest
// --------------------------------------------------------------------------

// Re-express a parsed nlohmann value in the deterministic tree.  Numbers are
// canonicalized by value (1 and 1.0 both print as "1"), so the digest sees
// JSON values rather than their source spelling.
inline JValue canonical(const nlohmann::json& j) {
    using nlohmann::json;
    switch (j.type()) {
        case json::value_t::null: return JValue::null();
        case json::value_t::boolean: return JValue::boolean(j.get<bool>());
        case json::value_t::number_integer: return JValue::integer(j.get<long long>());
        case json::value_t::number_unsigned:
            return JValue::integer(static_cast<long long>(j.get<unsigned long long>()));
        case json::value_t::number_float: return JValue::number(j.get<double>());
        case json::value_t::string: return JValue::string(j.get<std::string>());
        case json::value_t::array: {
            JValue a = JValue::array();
            for (const auto& item : j) a.push(canonical(item));
            return a;
        }
        case json::value_t::object: {
            JValue o = JValue::object();
            for (auto it = j.begin(); it != j.end(); ++it) o.set(it.key(), canonical(it.value()));
            return o;
        }
        default:
            throw std::invalid_argument("canonical: unsupported JSON value type");
    }
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64-bit offset basis
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;  // FNV-1a 64-bit prime
    }
    return h;
}

// Digest of a configuration: FNV-1a over the canonical dump, formatted as
// "fnv1a:<16 hex digits>".  Whitespace- and key-order-insensitive.
inline std::string config_digest(const nlohmann::json& config) {
    std::uint64_t h = fnv1a(canonical(config).dump());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace compasskit::jsonio
