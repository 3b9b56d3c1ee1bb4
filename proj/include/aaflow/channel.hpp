#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace aaflow {

// Cooperative cancellation shared by every channel of a pipeline run. The
// watchdog trips it when no item has moved for too long; blocked senders and
// receivers then unblock by throwing. The first trip wins; its reason is
// published before the flag so readers never see a torn string.
struct AbortToken {
    std::atomic<bool> claimed{false};
    std::atomic<bool> aborted{false};
    std::string reason;

    void trip(std::string why) {
        bool expected = false;
        if (claimed.compare_exchange_strong(expected, true)) {
            reason = std::move(why);
            aborted.store(true, std::memory_order_release);
        }
    }
    bool tripped() const { return aborted.load(std::memory_order_acquire); }
};

class PipelineAborted : public std::runtime_error {
public:
    explicit PipelineAborted(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-capacity FIFO connecting pipeline stages. Senders block while full,
// receivers block while empty; closing drains remaining items before
// receivers see end-of-stream. Sending after close is a usage error.
template <typename T>
class BoundedChannel {
public:
    explicit BoundedChannel(std::size_t capacity, std::shared_ptr<AbortToken> abort = nullptr,
                            std::atomic<std::uint64_t>* progress = nullptr)
        : capacity_(capacity), abort_(std::move(abort)), progress_(progress) {
        if (capacity_ < 1) {
            throw std::invalid_argument("BoundedChannel: capacity must be >= 1");
        }
    }

    void send(T item) {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            check_abort();
            if (closed_) {
                throw std::logic_error("BoundedChannel::send after close");
            }
            if (queue_.size() < capacity_) {
                break;
            }
            not_full_.wait_for(lock, kAbortPollInterval);
        }
        queue_.push_back(std::move(item));
        bump_progress();
        not_empty_.notify_one();
    }

    // nullopt means closed and fully drained.
    std::optional<T> recv() {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            check_abort();
            if (!queue_.empty()) {
                break;
            }
            if (closed_) {
                return std::nullopt;
            }
            not_empty_.wait_for(lock, kAbortPollInterval);
        }
        T item = std::move(queue_.front());
        queue_.pop_front();
        bump_progress();
        not_full_.notify_one();
        return item;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            closed_ = true;
        }
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    std::size_t pending() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return queue_.size();
    }

private:
    static constexpr std::chrono::milliseconds kAbortPollInterval{100};

    void check_abort() const {
        if (abort_ && abort_->tripped()) {
            throw PipelineAborted("pipeline aborted: " + abort_->reason);
        }
    }

    void bump_progress() {
        if (progress_ != nullptr) {
            progress_->fetch_add(1, std::memory_order_relaxed);
        }
    }

    const std::size_t capacity_;
    std::shared_ptr<AbortToken> abort_;
    std::atomic<std::uint64_t>* progress_;

    mutable std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> queue_;
    bool closed_ = false;
};

} // namespace aaflow
