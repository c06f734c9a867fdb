#pragma once

#include "handfly/filters.hpp"

#include <cstdint>
#include <optional>

namespace handfly
{
struct ChainParams
{
        int median_half_width = 2;
        std::size_t calib_samples = filters::kMinCalibrationSamples;
        double calib_motion_limit = filters::kCalibrationMotionLimit;
        double accel_guard = filters::kAccelGuard;
        double alpha = 0.98;
        double beta = 0.1;
};

/// Median outlier suppression followed by gyro zero-offset compensation. The bias is
/// estimated from the first calibration window and stays zero until then.
class Preprocessor
{
public:
        explicit Preprocessor(const ChainParams& params);

        wire::ImuReading push(const wire::ImuReading& raw);

        [[nodiscard]] bool calibrated() const { return calibrator_.done(); }
        [[nodiscard]] const filters::ZeroOffset& offset() const { return calibrator_.offset(); }

private:
        filters::ImuMedian median_;
        filters::ZeroOffsetCalibrator calibrator_;
};

/// Palm/wrist chain: preprocessing and the quaternion gradient filter.
class WristChain
{
public:
        explicit WristChain(const ChainParams& params);

        void push(const wire::ImuReading& raw, std::uint64_t t_device);

        [[nodiscard]] const Quaternion& orientation() const { return state_.q; }
        [[nodiscard]] const wire::ImuReading& last() const { return last_; }
        [[nodiscard]] bool calibrated() const { return pre_.calibrated(); }
        [[nodiscard]] const filters::ZeroOffset& offset() const { return pre_.offset(); }

private:
        ChainParams params_;
        Preprocessor pre_;
        filters::QuaternionState state_;
        wire::ImuReading last_;
        bool initialized_ = false;
};

/// Finger chain: preprocessing and the per-axis complementary filter.
class FingerChain
{
public:
        explicit FingerChain(const ChainParams& params);

        void push(const wire::ImuReading& raw, std::uint64_t t_device);

        [[nodiscard]] double pitch() const { return state_.pitch; }
        [[nodiscard]] double roll() const { return state_.roll; }
        [[nodiscard]] bool calibrated() const { return pre_.calibrated(); }

private:
        ChainParams params_;
        Preprocessor pre_;
        filters::ComplementaryState state_;
        bool initialized_ = false;
};
}
