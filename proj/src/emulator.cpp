#include "handfly/emulator.hpp"

#include "handfly/filters.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace handfly::emulator
{
Pose Script::at(double t) const
{
        if (keyframes.empty())
        {
                return {{}, std::vector<double>(static_cast<std::size_t>(fingers), 0.0)};
        }
        if (t <= keyframes.front().t)
        {
                return keyframes.front().pose;
        }
        if (t >= keyframes.back().t)
        {
                return keyframes.back().pose;
        }
        const auto it = std::upper_bound(keyframes.begin(), keyframes.end(), t,
                                         [](double v, const Keyframe& k) { return v < k.t; });
        const Keyframe& b = *it;
        const Keyframe& a = *(it - 1);
        const double u = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
        const auto lerp = [u](double x, double y) { return x + (y - x) * u; };
        Pose p;
        p.wrist = {lerp(a.pose.wrist.roll, b.pose.wrist.roll), lerp(a.pose.wrist.pitch, b.pose.wrist.pitch),
                   lerp(a.pose.wrist.yaw, b.pose.wrist.yaw)};
        p.fingers.resize(a.pose.fingers.size());
        for (std::size_t i = 0; i < p.fingers.size(); ++i)
        {
                p.fingers[i] = lerp(a.pose.fingers[i], b.pose.fingers[i]);
        }
        return p;
}

Script& Script::then(double dt, const Euler& wrist_deg, std::vector<double> fingers_deg)
{
        const double t = keyframes.empty() ? 0.0 : keyframes.back().t + dt;
        Pose p{{deg2rad(wrist_deg.roll), deg2rad(wrist_deg.pitch), deg2rad(wrist_deg.yaw)}, {}};
        for (double f : fingers_deg)
        {
                p.fingers.push_back(deg2rad(f));
        }
        p.fingers.resize(static_cast<std::size_t>(fingers), 0.0);
        keyframes.push_back({t, std::move(p)});
        return *this;
}

Script& Script::hold(double dt)
{
        if (keyframes.empty())
        {
                then(0, {}, {});
        }
        Keyframe k = keyframes.back();
        k.t += dt;
        keyframes.push_back(std::move(k));
        return *this;
}

Script parse_script(std::string_view text)
{
        const auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object())
        {
                throw ScriptParseError("script is not a JSON object");
        }
        try
        {
                Script s;
                s.rate_hz = j.value("rate_hz", 100);
                s.fingers = j.value("fingers", 2);
                if (s.rate_hz < 1 || s.fingers < wire::kMinFingers || s.fingers > wire::kMaxFingers)
                {
                        throw ScriptParseError("rate_hz must be >= 1 and fingers in 1..5");
                }
                const auto& frames = j.at("keyframes");
                if (!frames.is_array() || frames.empty())
                {
                        throw ScriptParseError("keyframes must be a non-empty array");
                }
                double last_t = -1;
                for (const auto& k : frames)
                {
                        const double t = k.at("t").get<double>();
                        const auto wrist = k.at("wrist").get<std::vector<double>>();
                        const auto fingers = k.value("fingers", std::vector<double>{});
                        if (!(t > last_t) || wrist.size() != 3
                            || static_cast<int>(fingers.size()) > s.fingers)
                        {
                                throw ScriptParseError("keyframe times must increase; wrist needs 3 angles");
                        }
                        last_t = t;
                        Pose p{{deg2rad(wrist[0]), deg2rad(wrist[1]), deg2rad(wrist[2])}, {}};
                        for (double f : fingers)
                        {
                                p.fingers.push_back(deg2rad(f));
                        }
                        p.fingers.resize(static_cast<std::size_t>(s.fingers), 0.0);
                        s.keyframes.push_back({t, std::move(p)});
                }
                return s;
        }
        catch (const nlohmann::json::exception& e)
        {
                throw ScriptParseError(std::string("bad keyframe: ") + e.what());
        }
}

Script load_script(const std::filesystem::path& path)
{
        std::ifstream in(path);
        if (!in)
        {
                throw ScriptParseError("cannot read script " + path.string());
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_script(ss.str());
}

std::string serialize_script(const Script& s)
{
        nlohmann::ordered_json j;
        j["rate_hz"] = s.rate_hz;
        j["fingers"] = s.fingers;
        nlohmann::ordered_json frames = nlohmann::ordered_json::array();
        for (const auto& k : s.keyframes)
        {
                std::vector<double> fingers;
                for (double f : k.pose.fingers)
                {
                        fingers.push_back(rad2deg(f));
                }
                frames.push_back({{"t", k.t},
                                  {"wrist",
                                   {rad2deg(k.pose.wrist.roll), rad2deg(k.pose.wrist.pitch), rad2deg(k.pose.wrist.yaw)}},
                                  {"fingers", fingers}});
        }
        j["keyframes"] = std::move(frames);
        return j.dump(1);
}

Quaternion finger_orientation(const Pose& pose, std::size_t i)
{
        return filters::euler_to_quat(pose.wrist) * axis_angle({0, 1, 0}, pose.fingers.at(i));
}

GloveSynth::GloveSynth(int fingers, int rate_hz, Noise noise)
        : fingers_(fingers), rate_hz_(rate_hz), noise_(noise), rng_(noise.seed)
{
}

wire::ImuReading GloveSynth::reading(const Quaternion& prev, const Quaternion& cur)
{
        const double dt = 1.0 / rate_hz_;
        wire::ImuReading r;
        r.gyro = (1.0 / dt) * rotation_vector(prev.conjugate() * cur);
        r.accel = rotate_into_body(cur, {0, 0, kGravity});
        for (std::size_t i = 0; i < 3; ++i)
        {
                r.gyro[i] += noise_.gyro_sigma * normal_(rng_);
                r.accel[i] += noise_.accel_sigma * normal_(rng_);
        }
        return r;
}

wire::GlovePacket GloveSynth::next(const Pose& pose)
{
        std::vector<Quaternion> cur;
        cur.push_back(filters::euler_to_quat(pose.wrist));
        for (int i = 0; i < fingers_; ++i)
        {
                cur.push_back(finger_orientation(pose, static_cast<std::size_t>(i)));
        }
        if (prev_.empty())
        {
                prev_ = cur;
        }

        wire::GlovePacket p;
        p.seq = seq_;
        p.t_device = static_cast<std::uint64_t>(seq_) * 1000000ULL / static_cast<std::uint64_t>(rate_hz_);
        p.palm = reading(prev_[0], cur[0]);
        for (int i = 0; i < fingers_; ++i)
        {
                p.fingers.push_back(reading(prev_[static_cast<std::size_t>(i) + 1], cur[static_cast<std::size_t>(i) + 1]));
        }
        prev_ = std::move(cur);
        ++seq_;
        return p;
}

std::vector<wire::GlovePacket> synthesize(const Script& script, Noise noise)
{
        GloveSynth synth(script.fingers, script.rate_hz, noise);
        const auto count = static_cast<std::uint32_t>(script.duration() * script.rate_hz) + 1;
        std::vector<wire::GlovePacket> out;
        out.reserve(count);
        for (std::uint32_t k = 0; k < count; ++k)
        {
                out.push_back(synth.next(script.at(synth.time_of(k))));
        }
        return out;
}
}
