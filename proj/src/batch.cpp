#include "handfly/batch.hpp"

namespace handfly::batch
{
namespace
{
Track allocate(const Session& s)
{
        const std::size_t n = s.packets.size();
        const auto f = static_cast<std::size_t>(s.header.fingers);
        Track t;
        t.t_device.resize(n);
        t.wrist.resize(n);
        t.finger_roll.assign(f, std::vector<double>(n));
        t.finger_pitch.assign(f, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k)
        {
                t.t_device[k] = s.packets[k].t_device;
        }
        return t;
}

// Chain 0 is the palm, chain i > 0 is finger i - 1.
void run_chain(const Session& s, std::size_t chain, const ChainParams& params, Track& out)
{
        if (chain == 0)
        {
                WristChain w(params);
                for (std::size_t k = 0; k < s.packets.size(); ++k)
                {
                        w.push(s.packets[k].palm, s.packets[k].t_device);
                        out.wrist[k] = filters::quat_to_euler(w.orientation());
                }
                return;
        }
        const std::size_t i = chain - 1;
        FingerChain f(params);
        auto& roll = out.finger_roll[i];
        auto& pitch = out.finger_pitch[i];
        for (std::size_t k = 0; k < s.packets.size(); ++k)
        {
                f.push(s.packets[k].fingers[i], s.packets[k].t_device);
                roll[k] = f.roll();
                pitch[k] = f.pitch();
        }
}

struct Job
{
        std::size_t session;
        std::size_t chain;
};

std::vector<Job> jobs(std::span<const Session> sessions)
{
        std::vector<Job> out;
        for (std::size_t s = 0; s < sessions.size(); ++s)
        {
                for (std::size_t c = 0; c <= static_cast<std::size_t>(sessions[s].header.fingers); ++c)
                {
                        out.push_back({s, c});
                }
        }
        return out;
}
}

std::vector<Session> split_sessions(const std::vector<session::SessionRecord>& records, wire::SessionHeader initial)
{
        std::vector<Session> out;
        wire::Ingestor ingestor(initial);
        Session current{initial, {}};
        for (const auto& r : records)
        {
                if (r.stream != session::Stream::Glove)
                {
                        continue;
                }
                auto outcome = ingestor.push(r.payload, r.t_host);
                if (outcome.header)
                {
                        if (!current.packets.empty())
                        {
                                out.push_back(std::move(current));
                        }
                        current = {*outcome.header, {}};
                }
                if (outcome.accepted)
                {
                        current.packets.push_back(std::move(*outcome.accepted));
                }
        }
        if (!current.packets.empty())
        {
                out.push_back(std::move(current));
        }
        return out;
}

std::vector<Track> estimate_serial(std::span<const Session> sessions, const ChainParams& params)
{
        std::vector<Track> out;
        out.reserve(sessions.size());
        for (const auto& s : sessions)
        {
                out.push_back(allocate(s));
        }
        for (const Job& j : jobs(sessions))
        {
                run_chain(sessions[j.session], j.chain, params, out[j.session]);
        }
        return out;
}

std::vector<Track> estimate_parallel(std::span<const Session> sessions, const ChainParams& params)
{
        std::vector<Track> out;
        out.reserve(sessions.size());
        for (const auto& s : sessions)
        {
                out.push_back(allocate(s));
        }
        const std::vector<Job> work = jobs(sessions);
        const auto n = static_cast<std::int64_t>(work.size());
        // Each job writes disjoint vectors of its own track, so no synchronization is needed.
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t j = 0; j < n; ++j)
        {
                const Job& job = work[static_cast<std::size_t>(j)];
                run_chain(sessions[job.session], job.chain, params, out[job.session]);
        }
        return out;
}
}
