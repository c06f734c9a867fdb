#include "handfly/imu_chain.hpp"

namespace handfly
{
Preprocessor::Preprocessor(const ChainParams& params)
        : median_(params.median_half_width), calibrator_(params.calib_samples, params.calib_motion_limit)
{
}

wire::ImuReading Preprocessor::push(const wire::ImuReading& raw)
{
        const wire::ImuReading filtered = median_.push(raw);
        if (!calibrator_.done())
        {
                calibrator_.feed(filtered);
                return filtered;
        }
        return calibrator_.offset().apply(filtered);
}

WristChain::WristChain(const ChainParams& params) : params_(params), pre_(params)
{
        state_.beta = params.beta;
}

void WristChain::push(const wire::ImuReading& raw, std::uint64_t t_device)
{
        last_ = pre_.push(raw);
        if (!initialized_)
        {
                if (const auto tilt = filters::accel_tilt(last_.accel, params_.accel_guard))
                {
                        state_.q = filters::euler_to_quat({tilt->roll, tilt->pitch, 0});
                }
                state_.last_t_device = t_device;
                initialized_ = true;
                return;
        }
        const double dt = static_cast<double>(t_device - *state_.last_t_device) * 1e-6;
        state_ = filters::madgwick_update(state_, last_, dt, params_.accel_guard);
        state_.last_t_device = t_device;
}

FingerChain::FingerChain(const ChainParams& params) : params_(params), pre_(params)
{
        state_.alpha = params.alpha;
}

void FingerChain::push(const wire::ImuReading& raw, std::uint64_t t_device)
{
        const wire::ImuReading r = pre_.push(raw);
        if (!initialized_)
        {
                if (const auto tilt = filters::accel_tilt(r.accel, params_.accel_guard))
                {
                        state_.roll = tilt->roll;
                        state_.pitch = tilt->pitch;
                }
                state_.last_t_device = t_device;
                initialized_ = true;
                return;
        }
        const double dt = static_cast<double>(t_device - *state_.last_t_device) * 1e-6;
        state_ = filters::complementary_update(state_, r, dt, params_.accel_guard);
        state_.last_t_device = t_device;
}
}
