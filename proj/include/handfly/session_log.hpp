#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handfly::session
{
enum class Stream
{
        Glove,
        Command,
        Telemetry,
        Event,
};

std::string_view to_string(Stream s);
std::optional<Stream> stream_from_string(std::string_view s);

struct SessionRecord
{
        Stream stream = Stream::Glove;
        std::int64_t t_host = 0; // ns since epoch
        std::string payload;     // one JSON value, no newlines

        friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// `{"s":"glove","t":1690000000000000000,"d":<payload>}`
std::string format_record(const SessionRecord& r);

/// Strict inverse of format_record; the payload bytes are returned verbatim.
std::optional<SessionRecord> parse_record(std::string_view line);

class ClockRegression : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

class IoFailure : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

std::int64_t wall_clock_ns();

/// Append-only line-delimited session file. One writer per file; append is thread-safe.
class SessionLog
{
public:
        explicit SessionLog(const std::filesystem::path& path);
        ~SessionLog();
        SessionLog(const SessionLog&) = delete;
        SessionLog& operator=(const SessionLog&) = delete;

        /// Throws ClockRegression when t_host is older than the last record, IoFailure on write errors.
        void append(const SessionRecord& rec);

        /// Stamps the record with the wall clock under the writer lock, so records stay ordered.
        void append_now(Stream stream, std::string payload);

        [[nodiscard]] std::uint64_t count() const;

private:
        mutable std::mutex mutex_;
        std::FILE* file_ = nullptr;
        std::int64_t last_t_host_ = std::numeric_limits<std::int64_t>::min();
        std::uint64_t count_ = 0;
};

struct ReadResult
{
        std::vector<SessionRecord> records;
        std::uint64_t corrupt = 0;
};

/// Reads a session file, skipping (and counting) lines that fail to parse.
ReadResult read_log(const std::filesystem::path& path);

/// Infinite speed replays without delay.
inline constexpr double kBatch = std::numeric_limits<double>::infinity();

/// Re-emits records with inter-record gaps scaled by 1/speed. Returns the number of records emitted.
std::uint64_t replay(const std::vector<SessionRecord>& records, double speed,
                     const std::function<void(const SessionRecord&)>& sink);

struct AlignedEntry
{
        SessionRecord record;
        /// For telemetry entries: index into the glove list of the latest glove record with
        /// t_host <= this one, or nullopt when no glove data preceded it.
        std::optional<std::size_t> glove_index;
};

/// Stable merge by t_host (glove first on ties).
std::vector<AlignedEntry> align(const std::vector<SessionRecord>& glove, const std::vector<SessionRecord>& telemetry);

/// Flat CSV with one row per record for external plotting.
void export_csv(const std::vector<SessionRecord>& records, std::FILE* out);
}
