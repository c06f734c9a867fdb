#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace handfly
{
/// Bounded FIFO between one producer loop and one consumer loop. When full, the oldest
/// element is dropped and counted.
template <typename T>
class BoundedChannel
{
public:
        explicit BoundedChannel(std::size_t capacity) : capacity_(capacity) {}

        void push(T value)
        {
                {
                        std::lock_guard lock(mutex_);
                        if (closed_)
                        {
                                return;
                        }
                        if (queue_.size() == capacity_)
                        {
                                queue_.pop_front();
                                ++overflow_;
                        }
                        queue_.push_back(std::move(value));
                }
                cv_.notify_one();
        }

        /// Blocks until a value arrives, the timeout passes, or the channel is closed and drained.
        template <typename Rep, typename Period>
        std::optional<T> pop(std::chrono::duration<Rep, Period> timeout)
        {
                std::unique_lock lock(mutex_);
                cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
                if (queue_.empty())
                {
                        return std::nullopt;
                }
                T value = std::move(queue_.front());
                queue_.pop_front();
                return value;
        }

        void close()
        {
                {
                        std::lock_guard lock(mutex_);
                        closed_ = true;
                }
                cv_.notify_all();
        }

        [[nodiscard]] bool closed() const
        {
                std::lock_guard lock(mutex_);
                return closed_;
        }

        [[nodiscard]] std::uint64_t overflow() const
        {
                std::lock_guard lock(mutex_);
                return overflow_;
        }

private:
        mutable std::mutex mutex_;
        std::condition_variable cv_;
        std::deque<T> queue_;
        std::size_t capacity_;
        std::uint64_t overflow_ = 0;
        bool closed_ = false;
};

/// Single-slot mailbox: writers overwrite, the reader sees the most recent value.
template <typename T>
class Mailbox
{
public:
        void put(T value)
        {
                std::lock_guard lock(mutex_);
                value_ = std::move(value);
                ++version_;
        }

        [[nodiscard]] std::optional<T> latest() const
        {
                std::lock_guard lock(mutex_);
                return value_;
        }

        [[nodiscard]] std::uint64_t version() const
        {
                std::lock_guard lock(mutex_);
                return version_;
        }

private:
        mutable std::mutex mutex_;
        std::optional<T> value_;
        std::uint64_t version_ = 0;
};
}
