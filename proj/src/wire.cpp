#include "handfly/wire.hpp"

#include <json.hpp>

#include <limits>
#include <sstream>

namespace handfly::wire
{
namespace
{
using nlohmann::json;
using nlohmann::ordered_json;

struct SchemaError
{
        ParseErrorKind kind;
        std::string detail;
};

Vec3 read_vec3(const json& j, const char* name)
{
        if (!j.is_array() || j.size() != 3)
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, std::string(name) + " must be a 3-array"};
        }
        Vec3 v{};
        for (std::size_t i = 0; i < 3; ++i)
        {
                if (!j[i].is_number())
                {
                        throw SchemaError{ParseErrorKind::SchemaViolation, std::string(name) + " element not a number"};
                }
                v[i] = j[i].get<double>();
                if (!std::isfinite(v[i]))
                {
                        throw SchemaError{ParseErrorKind::NonFiniteValue, std::string(name) + " element not finite"};
                }
        }
        return v;
}

ImuReading read_imu(const json& j)
{
        if (!j.is_object() || j.size() != 2 || !j.contains("g") || !j.contains("a"))
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "imu object must have exactly g and a"};
        }
        return {read_vec3(j["g"], "g"), read_vec3(j["a"], "a")};
}

std::uint64_t read_unsigned(const json& j, const char* name, std::uint64_t max)
{
        if (j.is_number_unsigned())
        {
                const auto v = j.get<std::uint64_t>();
                if (v <= max)
                {
                        return v;
                }
        }
        throw SchemaError{ParseErrorKind::SchemaViolation, std::string(name) + " must be an unsigned integer in range"};
}

GlovePacket read_packet(const json& j)
{
        if (j.size() != 4 || !j.contains("seq") || !j.contains("t") || !j.contains("palm") || !j.contains("fingers"))
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "packet needs exactly seq, t, palm, fingers"};
        }
        GlovePacket p;
        p.seq = static_cast<std::uint32_t>(read_unsigned(j["seq"], "seq", std::numeric_limits<std::uint32_t>::max()));
        p.t_device = read_unsigned(j["t"], "t", std::numeric_limits<std::uint64_t>::max());
        p.palm = read_imu(j["palm"]);
        const json& fingers = j["fingers"];
        if (!fingers.is_array() || fingers.size() < kMinFingers || fingers.size() > kMaxFingers)
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "fingers must be an array of 1..5 imu objects"};
        }
        p.fingers.reserve(fingers.size());
        for (const json& f : fingers)
        {
                p.fingers.push_back(read_imu(f));
        }
        return p;
}

SessionHeader read_header(const json& j)
{
        if (j.size() != 3 || !j.contains("fingers") || !j.contains("rate_hz"))
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "header needs exactly hdr, fingers, rate_hz"};
        }
        if (read_unsigned(j["hdr"], "hdr", 1) != 1)
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "unsupported header version"};
        }
        SessionHeader h;
        h.fingers = static_cast<int>(read_unsigned(j["fingers"], "fingers", kMaxFingers));
        h.rate_hz = static_cast<int>(read_unsigned(j["rate_hz"], "rate_hz", 100000));
        if (h.fingers < kMinFingers || h.rate_hz < 1)
        {
                throw SchemaError{ParseErrorKind::SchemaViolation, "header values out of range"};
        }
        return h;
}

std::variant<json, ParseError> parse_object(std::string_view text)
{
        json j;
        try
        {
                j = json::parse(text.begin(), text.end());
        }
        catch (const json::out_of_range&)
        {
                return ParseError{ParseErrorKind::NonFiniteValue, "number overflows a double"};
        }
        catch (const json::exception&)
        {
                return ParseError{ParseErrorKind::MalformedSyntax, "not valid JSON"};
        }
        if (!j.is_object())
        {
                return ParseError{ParseErrorKind::SchemaViolation, "top level must be an object"};
        }
        return j;
}

ordered_json imu_json(const ImuReading& r)
{
        return ordered_json{{"g", {r.gyro[0], r.gyro[1], r.gyro[2]}}, {"a", {r.accel[0], r.accel[1], r.accel[2]}}};
}
}

std::string_view to_string(ParseErrorKind kind)
{
        switch (kind)
        {
        case ParseErrorKind::MalformedSyntax:
                return "MalformedSyntax";
        case ParseErrorKind::SchemaViolation:
                return "SchemaViolation";
        case ParseErrorKind::NonFiniteValue:
                return "NonFiniteValue";
        }
        return "Unknown";
}

std::variant<Datagram, ParseError> parse_datagram(std::string_view datagram)
{
        auto parsed = parse_object(datagram);
        if (auto* err = std::get_if<ParseError>(&parsed))
        {
                return *err;
        }
        const json& j = std::get<json>(parsed);
        try
        {
                if (j.contains("hdr"))
                {
                        return Datagram{read_header(j)};
                }
                return Datagram{read_packet(j)};
        }
        catch (const SchemaError& e)
        {
                return ParseError{e.kind, e.detail};
        }
}

std::variant<GlovePacket, ParseError> parse_packet(std::string_view datagram)
{
        auto parsed = parse_datagram(datagram);
        if (auto* err = std::get_if<ParseError>(&parsed))
        {
                return *err;
        }
        auto& d = std::get<Datagram>(parsed);
        if (auto* p = std::get_if<GlovePacket>(&d))
        {
                return std::move(*p);
        }
        return ParseError{ParseErrorKind::SchemaViolation, "session header where a data packet was expected"};
}

std::string serialize_packet(const GlovePacket& p)
{
        ordered_json j;
        j["seq"] = p.seq;
        j["t"] = p.t_device;
        j["palm"] = imu_json(p.palm);
        ordered_json fingers = ordered_json::array();
        for (const auto& f : p.fingers)
        {
                fingers.push_back(imu_json(f));
        }
        j["fingers"] = std::move(fingers);
        return j.dump();
}

std::string serialize_header(const SessionHeader& h)
{
        ordered_json j;
        j["hdr"] = 1;
        j["fingers"] = h.fingers;
        j["rate_hz"] = h.rate_hz;
        return j.dump();
}

std::string to_string(const IngestReport& r)
{
        std::ostringstream os;
        os << "received=" << r.received << " dropped=" << r.dropped << " reordered=" << r.reordered
           << " malformed=" << r.malformed;
        return os.str();
}

FingerCountMismatch::FingerCountMismatch(int expected, int got)
        : std::runtime_error("finger count mismatch: session declares " + std::to_string(expected) + ", packet has "
                             + std::to_string(got))
{
}

Verdict ingest_step(IngestState& state, const GlovePacket& p)
{
        if (static_cast<int>(p.fingers.size()) != state.header.fingers)
        {
                throw FingerCountMismatch(state.header.fingers, static_cast<int>(p.fingers.size()));
        }
        if (state.last_seq)
        {
                if (p.seq <= *state.last_seq || p.t_device <= state.last_t_device)
                {
                        ++state.report.reordered;
                        return Verdict::Discard;
                }
                state.report.dropped += p.seq - *state.last_seq - 1;
        }
        state.last_seq = p.seq;
        state.last_t_device = p.t_device;
        return Verdict::Accept;
}

Ingestor::Ingestor(SessionHeader header)
{
        state_.header = header;
}

Ingestor::Outcome Ingestor::push(std::string_view datagram, std::optional<std::int64_t> t_host)
{
        auto parsed = parse_datagram(datagram);
        if (std::holds_alternative<ParseError>(parsed))
        {
                ++state_.report.malformed;
                return {};
        }
        ++state_.report.received;
        auto& d = std::get<Datagram>(parsed);
        if (auto* h = std::get_if<SessionHeader>(&d))
        {
                // A header opens a new session; sequence tracking restarts.
                state_.header = *h;
                state_.last_seq.reset();
                state_.last_t_device = 0;
                return {std::nullopt, *h, serialize_header(*h)};
        }
        auto& p = std::get<GlovePacket>(d);
        p.t_host = t_host;
        std::string canonical = serialize_packet(p);
        if (ingest_step(state_, p) == Verdict::Accept)
        {
                return {std::move(p), std::nullopt, std::move(canonical)};
        }
        return {std::nullopt, std::nullopt, std::move(canonical)};
}
}
