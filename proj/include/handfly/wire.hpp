#pragma once

#include "handfly/vec.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace handfly::wire
{
inline constexpr std::uint16_t kGlovePort = 47800;
inline constexpr std::uint16_t kTelemetryPort = 47801;
inline constexpr std::uint16_t kUavPort = 47802;
inline constexpr std::uint16_t kVibrationPort = 47803;

inline constexpr int kMinFingers = 1;
inline constexpr int kMaxFingers = 5;

struct ImuReading
{
        Vec3 gyro{};  // rad/s, body frame
        Vec3 accel{}; // m/s^2, body frame

        friend bool operator==(const ImuReading&, const ImuReading&) = default;
};

struct GlovePacket
{
        std::uint32_t seq = 0;
        std::uint64_t t_device = 0; // microseconds since device boot
        ImuReading palm;
        std::vector<ImuReading> fingers;
        std::optional<std::int64_t> t_host; // ns since epoch, never on the wire

        friend bool operator==(const GlovePacket&, const GlovePacket&) = default;

        /// Equality of the wire-visible fields.
        [[nodiscard]] bool same_wire(const GlovePacket& o) const
        {
                return seq == o.seq && t_device == o.t_device && palm == o.palm && fingers == o.fingers;
        }
};

struct SessionHeader
{
        int fingers = 2;
        int rate_hz = 100;

        friend bool operator==(const SessionHeader&, const SessionHeader&) = default;
};

enum class ParseErrorKind
{
        MalformedSyntax,
        SchemaViolation,
        NonFiniteValue,
};

struct ParseError
{
        ParseErrorKind kind;
        std::string detail;
};

std::string_view to_string(ParseErrorKind kind);

using Datagram = std::variant<GlovePacket, SessionHeader>;

/// Parses a glove data packet. Session headers are rejected as SchemaViolation.
std::variant<GlovePacket, ParseError> parse_packet(std::string_view datagram);

/// Parses either a session header or a data packet.
std::variant<Datagram, ParseError> parse_datagram(std::string_view datagram);

std::string serialize_packet(const GlovePacket& p);
std::string serialize_header(const SessionHeader& h);

struct IngestReport
{
        std::uint64_t received = 0;
        std::uint64_t dropped = 0;
        std::uint64_t reordered = 0;
        std::uint64_t malformed = 0;

        friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

std::string to_string(const IngestReport& r);

class FingerCountMismatch : public std::runtime_error
{
public:
        FingerCountMismatch(int expected, int got);
};

enum class Verdict
{
        Accept,
        Discard,
};

struct IngestState
{
        SessionHeader header;
        std::optional<std::uint32_t> last_seq;
        std::uint64_t last_t_device = 0;
        IngestReport report;
};

/// Sequence bookkeeping for one packet. Throws FingerCountMismatch.
Verdict ingest_step(IngestState& state, const GlovePacket& p);

/// Datagram-level ingestion: parses, counts malformed/received, applies headers and sequence rules.
class Ingestor
{
public:
        explicit Ingestor(SessionHeader header = {});

        struct Outcome
        {
                std::optional<GlovePacket> accepted;
                std::optional<SessionHeader> header;
                std::optional<std::string> canonical; // re-serialized form of any valid datagram
        };

        Outcome push(std::string_view datagram, std::optional<std::int64_t> t_host = std::nullopt);

        [[nodiscard]] const IngestState& state() const { return state_; }

private:
        IngestState state_;
};
}
