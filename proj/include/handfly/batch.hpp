#pragma once

#include "handfly/imu_chain.hpp"
#include "handfly/session_log.hpp"
#include "handfly/wire.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace handfly::batch
{
/// Accepted packets of one glove session, in arrival order.
struct Session
{
        wire::SessionHeader header;
        std::vector<wire::GlovePacket> packets;
};

/// Splits recorded glove records into sessions using the live ingestion rules.
std::vector<Session> split_sessions(const std::vector<session::SessionRecord>& records, wire::SessionHeader initial = {});

/// Absolute orientation history of every IMU chain of a session, one entry per packet.
struct Track
{
        std::vector<std::uint64_t> t_device;
        std::vector<Euler> wrist;                    // palm, radians
        std::vector<std::vector<double>> finger_roll; // [finger][sample]
        std::vector<std::vector<double>> finger_pitch;

        friend bool operator==(const Track&, const Track&) = default;
};

/// Reference implementation: every chain of every session in turn.
std::vector<Track> estimate_serial(std::span<const Session> sessions, const ChainParams& params);

/// Same result, with the independent (session, chain) pairs spread over OpenMP threads.
std::vector<Track> estimate_parallel(std::span<const Session> sessions, const ChainParams& params);
}
