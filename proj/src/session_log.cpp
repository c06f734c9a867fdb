#include "handfly/session_log.hpp"

#include "handfly/command.hpp"
#include "handfly/uav_sim.hpp"
#include "handfly/wire.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

namespace handfly::session
{
std::string_view to_string(Stream s)
{
        switch (s)
        {
        case Stream::Glove:
                return "glove";
        case Stream::Command:
                return "command";
        case Stream::Telemetry:
                return "telemetry";
        case Stream::Event:
                return "event";
        }
        return "event";
}

std::optional<Stream> stream_from_string(std::string_view s)
{
        for (Stream v : {Stream::Glove, Stream::Command, Stream::Telemetry, Stream::Event})
        {
                if (to_string(v) == s)
                {
                        return v;
                }
        }
        return std::nullopt;
}

std::string format_record(const SessionRecord& r)
{
        std::string line;
        line.reserve(r.payload.size() + 48);
        line += R"({"s":")";
        line += to_string(r.stream);
        line += R"(","t":)";
        line += std::to_string(r.t_host);
        line += R"(,"d":)";
        line += r.payload;
        line += '}';
        return line;
}

std::optional<SessionRecord> parse_record(std::string_view line)
{
        if (!line.empty() && line.back() == '\r')
        {
                line.remove_suffix(1);
        }
        constexpr std::string_view kStream = R"({"s":")";
        constexpr std::string_view kTime = R"(","t":)";
        constexpr std::string_view kData = R"(,"d":)";
        if (!line.starts_with(kStream) || !line.ends_with('}'))
        {
                return std::nullopt;
        }
        line.remove_prefix(kStream.size());
        const auto tag_end = line.find('"');
        if (tag_end == std::string_view::npos)
        {
                return std::nullopt;
        }
        const auto stream = stream_from_string(line.substr(0, tag_end));
        line.remove_prefix(tag_end);
        if (!stream || !line.starts_with(kTime))
        {
                return std::nullopt;
        }
        line.remove_prefix(kTime.size());
        std::int64_t t = 0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), t);
        if (ec != std::errc{})
        {
                return std::nullopt;
        }
        line.remove_prefix(static_cast<std::size_t>(ptr - line.data()));
        if (!line.starts_with(kData))
        {
                return std::nullopt;
        }
        line.remove_prefix(kData.size());
        line.remove_suffix(1);
        if (!nlohmann::json::accept(line.begin(), line.end()))
        {
                return std::nullopt;
        }
        return SessionRecord{*stream, t, std::string(line)};
}

std::int64_t wall_clock_ns()
{
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
}

SessionLog::SessionLog(const std::filesystem::path& path)
{
        file_ = std::fopen(path.c_str(), "ae");
        if (file_ == nullptr)
        {
                throw IoFailure("cannot open session log " + path.string());
        }
}

SessionLog::~SessionLog()
{
        if (file_ != nullptr)
        {
                std::fclose(file_);
        }
}

void SessionLog::append(const SessionRecord& rec)
{
        std::lock_guard lock(mutex_);
        if (rec.t_host < last_t_host_)
        {
                throw ClockRegression("session record at " + std::to_string(rec.t_host) + " precedes "
                                      + std::to_string(last_t_host_));
        }
        if (rec.payload.find('\n') != std::string::npos)
        {
                throw IoFailure("payload contains a newline");
        }
        const std::string line = format_record(rec) + '\n';
        if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        {
                throw IoFailure("session log write failed");
        }
        last_t_host_ = rec.t_host;
        ++count_;
}

void SessionLog::append_now(Stream stream, std::string payload)
{
        std::lock_guard lock(mutex_);
        const std::int64_t now = std::max(wall_clock_ns(), last_t_host_);
        const std::string line = format_record({stream, now, std::move(payload)}) + '\n';
        if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        {
                throw IoFailure("session log write failed");
        }
        last_t_host_ = now;
        ++count_;
}

std::uint64_t SessionLog::count() const
{
        std::lock_guard lock(mutex_);
        return count_;
}

ReadResult read_log(const std::filesystem::path& path)
{
        std::ifstream in(path);
        if (!in)
        {
                throw IoFailure("cannot read session log " + path.string());
        }
        ReadResult result;
        std::string line;
        while (std::getline(in, line))
        {
                if (line.empty())
                {
                        continue;
                }
                if (auto rec = parse_record(line))
                {
                        result.records.push_back(std::move(*rec));
                }
                else
                {
                        ++result.corrupt;
                }
        }
        return result;
}

std::uint64_t replay(const std::vector<SessionRecord>& records, double speed,
                     const std::function<void(const SessionRecord&)>& sink)
{
        if (!(speed > 0))
        {
                throw std::invalid_argument("replay speed must be positive");
        }
        if (records.empty())
        {
                return 0;
        }
        const bool batch = std::isinf(speed);
        const auto start = std::chrono::steady_clock::now();
        const std::int64_t t0 = records.front().t_host;
        for (const auto& r : records)
        {
                if (!batch)
                {
                        const auto offset = std::chrono::nanoseconds(
                                static_cast<std::int64_t>(static_cast<double>(r.t_host - t0) / speed));
                        std::this_thread::sleep_until(start + offset);
                }
                sink(r);
        }
        return records.size();
}

std::vector<AlignedEntry> align(const std::vector<SessionRecord>& glove, const std::vector<SessionRecord>& telemetry)
{
        std::vector<AlignedEntry> merged;
        merged.reserve(glove.size() + telemetry.size());
        std::size_t g = 0;
        std::size_t t = 0;
        std::optional<std::size_t> last_glove;
        while (g < glove.size() || t < telemetry.size())
        {
                if (t == telemetry.size() || (g < glove.size() && glove[g].t_host <= telemetry[t].t_host))
                {
                        last_glove = g;
                        merged.push_back({glove[g++], std::nullopt});
                }
                else
                {
                        merged.push_back({telemetry[t++], last_glove});
                }
        }
        return merged;
}

namespace
{
constexpr int kCsvFingers = wire::kMaxFingers;

void put_number(std::string& row, double v)
{
        row += ',';
        char buf[32];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
        row.append(buf, ptr);
}

void put_empty(std::string& row, int n)
{
        row.append(static_cast<std::size_t>(n), ',');
}
}

void export_csv(const std::vector<SessionRecord>& records, std::FILE* out)
{
        std::string header = "stream,t_host,seq,t";
        for (const char* imu : {"palm", "f0", "f1", "f2", "f3", "f4"})
        {
                for (const char* ch : {"gx", "gy", "gz", "ax", "ay", "az"})
                {
                        header += std::string(",") + imu + "_" + ch;
                }
        }
        header += ",vf,vl,alt,yr,grip,px,py,pz,vx,vy,vz,yaw,speed,event\n";
        std::fputs(header.c_str(), out);

        constexpr int kImuColumns = 6 * (1 + kCsvFingers);
        for (const auto& r : records)
        {
                std::string row(to_string(r.stream));
                row += ',' + std::to_string(r.t_host);
                switch (r.stream)
                {
                case Stream::Glove: {
                        const auto parsed = wire::parse_packet(r.payload);
                        const auto* p = std::get_if<wire::GlovePacket>(&parsed);
                        if (p == nullptr)
                        {
                                put_empty(row, 2 + kImuColumns + 13);
                                row += ",header";
                                break;
                        }
                        row += ',' + std::to_string(p->seq) + ',' + std::to_string(p->t_device);
                        const auto put_imu = [&](const wire::ImuReading& imu) {
                                for (double v : imu.gyro)
                                {
                                        put_number(row, v);
                                }
                                for (double v : imu.accel)
                                {
                                        put_number(row, v);
                                }
                        };
                        put_imu(p->palm);
                        for (const auto& f : p->fingers)
                        {
                                put_imu(f);
                        }
                        put_empty(row, 6 * (kCsvFingers - static_cast<int>(p->fingers.size())) + 14);
                        break;
                }
                case Stream::Command: {
                        const auto c = command::parse_command(r.payload);
                        put_empty(row, 1);
                        row += c ? ',' + std::to_string(c->t_device) : std::string(",");
                        put_empty(row, kImuColumns);
                        if (c)
                        {
                                put_number(row, c->v_forward);
                                put_number(row, c->v_lateral);
                                put_number(row, c->altitude_target);
                                put_number(row, c->yaw_rate);
                                row += ',';
                                row += command::to_string(c->gripper);
                        }
                        else
                        {
                                put_empty(row, 5);
                        }
                        put_empty(row, 9);
                        break;
                }
                case Stream::Telemetry: {
                        const auto t = sim::parse_telemetry(r.payload);
                        if (!t)
                        {
                                put_empty(row, 2 + kImuColumns + 14);
                                break;
                        }
                        row += ',' + std::to_string(t->seq);
                        put_number(row, t->t_sim);
                        put_empty(row, kImuColumns + 4);
                        row += ',';
                        row += sim::to_string(t->gripper);
                        for (double v : t->position)
                        {
                                put_number(row, v);
                        }
                        for (double v : t->velocity)
                        {
                                put_number(row, v);
                        }
                        put_number(row, t->yaw);
                        put_number(row, t->speed);
                        put_empty(row, 1);
                        break;
                }
                case Stream::Event: {
                        put_empty(row, 2 + kImuColumns + 13);
                        row += ',';
                        // Payloads are JSON objects; quote them for CSV.
                        row += '"';
                        for (char ch : r.payload)
                        {
                                row += ch;
                                if (ch == '"')
                                {
                                        row += '"';
                                }
                        }
                        row += '"';
                        break;
                }
                }
                row += '\n';
                std::fputs(row.c_str(), out);
        }
}
}
