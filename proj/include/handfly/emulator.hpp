#pragma once

#include "handfly/vec.hpp"
#include "handfly/wire.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace handfly::emulator
{
class ScriptParseError : public std::runtime_error
{
public:
        using std::runtime_error::runtime_error;
};

/// Hand pose: wrist orientation and per-finger flexion about the wrist's y axis (negative = flexed).
struct Pose
{
        Euler wrist;                // radians
        std::vector<double> fingers; // radians

        friend bool operator==(const Pose&, const Pose&) = default;
};

struct Keyframe
{
        double t = 0; // s
        Pose pose;
};

/// Timed keyframes, linearly interpolated. File form (angles in degrees):
/// `{"rate_hz":100,"fingers":2,"keyframes":[{"t":0,"wrist":[0,0,0],"fingers":[0,0]}, ...]}`
struct Script
{
        int rate_hz = 100;
        int fingers = 2;
        std::vector<Keyframe> keyframes;

        [[nodiscard]] double duration() const { return keyframes.empty() ? 0 : keyframes.back().t; }
        [[nodiscard]] Pose at(double t) const;

        /// Appends a keyframe `dt` seconds after the last one.
        Script& then(double dt, const Euler& wrist_deg, std::vector<double> fingers_deg);
        Script& hold(double dt);
};

Script parse_script(std::string_view text);
Script load_script(const std::filesystem::path& path);
std::string serialize_script(const Script& s);

/// Orientation of finger i's IMU.
Quaternion finger_orientation(const Pose& pose, std::size_t i);

struct Noise
{
        double gyro_sigma = 0.005; // rad/s
        double accel_sigma = 0.05; // m/s^2
        std::uint64_t seed = 1;
};

/// Synthesizes glove packets from a sampled pose trajectory: gyro is the body rate from the
/// finite difference of consecutive orientations, accel is gravity seen in the body frame.
class GloveSynth
{
public:
        GloveSynth(int fingers, int rate_hz, Noise noise = {});

        wire::GlovePacket next(const Pose& pose);

        [[nodiscard]] wire::SessionHeader header() const { return {fingers_, rate_hz_}; }
        [[nodiscard]] std::uint32_t samples() const { return seq_; }
        [[nodiscard]] double time_of(std::uint32_t seq) const { return static_cast<double>(seq) / rate_hz_; }

private:
        wire::ImuReading reading(const Quaternion& prev, const Quaternion& cur);

        int fingers_;
        int rate_hz_;
        Noise noise_;
        std::mt19937_64 rng_;
        std::normal_distribution<double> normal_{0.0, 1.0};
        std::uint32_t seq_ = 0;
        std::vector<Quaternion> prev_;
};

/// Every packet of a script, sampled at its rate, starting at t = 0.
std::vector<wire::GlovePacket> synthesize(const Script& script, Noise noise = {});
}
