#pragma once

#include <algorithm>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <tuple>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "sim_time.hpp"

namespace tlmforge {

class Scheduler;

inline constexpr std::uint64_t kDefaultEventLimit = 10'000'000;

struct EventId {
    std::uint64_t seq = 0;
    bool operator==(const EventId&) const = default;
};

namespace detail {
struct JoinState {
    bool done = false;
    SimTime finished_at;
    std::vector<std::coroutine_handle<>> waiters;
};
} // namespace detail

/// A resumable simulated process. Write one as a coroutine returning
/// Activity; it suspends with `co_await scheduler.wait(d)` or
/// `co_await handle.join()` and starts running only once spawned.
class Activity {
public:
    struct promise_type;
    using Handle = std::coroutine_handle<promise_type>;

    struct promise_type {
        Scheduler* scheduler = nullptr;
        std::shared_ptr<detail::JoinState> join = std::make_shared<detail::JoinState>();

        Activity get_return_object() { return Activity(Handle::from_promise(*this)); }
        std::suspend_always initial_suspend() noexcept { return {}; }

        struct FinalAwaiter {
            bool await_ready() noexcept { return false; }
            void await_suspend(Handle h) noexcept;
            void await_resume() noexcept {}
        };
        FinalAwaiter final_suspend() noexcept { return {}; }
        void return_void() noexcept {}
        void unhandled_exception() noexcept;
    };

    Activity(Activity&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
    Activity& operator=(Activity&& other) noexcept {
        if (this != &other) {
            if (handle_) handle_.destroy();
            handle_ = std::exchange(other.handle_, {});
        }
        return *this;
    }
    Activity(const Activity&) = delete;
    Activity& operator=(const Activity&) = delete;
    ~Activity() {
        if (handle_) handle_.destroy();
    }

private:
    friend class Scheduler;
    explicit Activity(Handle h) : handle_(h) {}
    Handle release() { return std::exchange(handle_, {}); }

    Handle handle_;
};

/// Observer of a spawned activity; `co_await h.join()` suspends the caller
/// until the activity has returned.
class ActivityHandle {
public:
    ActivityHandle() = default;
    explicit ActivityHandle(std::shared_ptr<detail::JoinState> state) : state_(std::move(state)) {}

    bool done() const { return state_ && state_->done; }
    SimTime finished_at() const { return state_ ? state_->finished_at : SimTime{}; }

    struct JoinAwaiter {
        std::shared_ptr<detail::JoinState> state;
        bool await_ready() const noexcept { return !state || state->done; }
        void await_suspend(std::coroutine_handle<> h) { state->waiters.push_back(h); }
        void await_resume() const noexcept {}
    };
    JoinAwaiter join() const { return JoinAwaiter{state_}; }

private:
    std::shared_ptr<detail::JoinState> state_;
};

/// Single-threaded discrete-event scheduler.
///
/// Events dispatch in ascending (time, insertion sequence) order; there are
/// no delta cycles, so equal-time events run first-in first-out. `now()`
/// never decreases during a run.
class Scheduler {
public:
    explicit Scheduler(std::uint64_t event_limit = kDefaultEventLimit) : event_limit_(event_limit) {}
    Scheduler(const Scheduler&) = delete;
    Scheduler& operator=(const Scheduler&) = delete;

    ~Scheduler() {
        for (void* addr : live_) Activity::Handle::from_address(addr).destroy();
    }

    SimTime now() const { return now_; }
    std::uint64_t dispatched() const { return dispatched_; }
    std::uint64_t event_limit() const { return event_limit_; }
    void set_event_limit(std::uint64_t limit) { event_limit_ = limit; }
    bool idle() const { return queue_.empty(); }

    /// Observer called with (time, sequence) for every dispatched event.
    void on_dispatch(std::function<void(SimTime, std::uint64_t)> observer) { observer_ = std::move(observer); }

    EventId schedule(std::function<void()> action, SimTime delay) {
        Event ev{now_ + delay, next_seq_++, std::move(action)};
        EventId id{ev.seq};
        queue_.push_back(std::move(ev));
        std::push_heap(queue_.begin(), queue_.end(), Later{});
        return id;
    }

    /// Cancelled events are dropped silently and do not count toward the
    /// event limit.
    void cancel(EventId id) { cancelled_.insert(id.seq); }

    ActivityHandle spawn(Activity activity, SimTime delay = {}) {
        auto h = activity.release();
        h.promise().scheduler = this;
        live_.insert(h.address());
        ActivityHandle handle(h.promise().join);
        schedule([h] { h.resume(); }, delay);
        return handle;
    }

    struct WaitAwaiter {
        Scheduler* scheduler;
        SimTime delay;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            scheduler->schedule([h] { h.resume(); }, delay);
        }
        void await_resume() const noexcept {}
    };

    /// Suspends the calling activity for `delay` of simulated time. A zero
    /// delay still yields to events already queued for the current time.
    WaitAwaiter wait(SimTime delay) { return WaitAwaiter{this, delay}; }

    /// Dispatches until the queue drains and returns the final time.
    /// Throws E-EVENT-LIMIT once more than event_limit() events dispatch.
    SimTime run() {
        while (!queue_.empty()) {
            std::pop_heap(queue_.begin(), queue_.end(), Later{});
            Event ev = std::move(queue_.back());
            queue_.pop_back();
            if (auto it = cancelled_.find(ev.seq); it != cancelled_.end()) {
                cancelled_.erase(it);
                continue;
            }
            if (++dispatched_ > event_limit_)
                throw Error("E-EVENT-LIMIT", "more than " + std::to_string(event_limit_) + " events dispatched");
            now_ = ev.time;
            if (observer_) observer_(ev.time, ev.seq);
            ev.action();
            if (failure_) std::rethrow_exception(std::exchange(failure_, nullptr));
        }
        return now_;
    }

private:
    friend struct Activity::promise_type;
    friend struct Activity::promise_type::FinalAwaiter;

    struct Event {
        SimTime time;
        std::uint64_t seq;
        std::function<void()> action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
        }
    };

    void retire(Activity::Handle h) {
        auto& join = *h.promise().join;
        join.done = true;
        join.finished_at = now_;
        for (auto waiter : join.waiters) schedule([waiter] { waiter.resume(); }, SimTime{});
        join.waiters.clear();
        live_.erase(h.address());
        h.destroy();
    }

    SimTime now_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t dispatched_ = 0;
    std::uint64_t event_limit_;
    std::vector<Event> queue_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::unordered_set<void*> live_;
    std::exception_ptr failure_;
    std::function<void(SimTime, std::uint64_t)> observer_;
};

inline void Activity::promise_type::FinalAwaiter::await_suspend(Handle h) noexcept { h.promise().scheduler->retire(h); }

inline void Activity::promise_type::unhandled_exception() noexcept {
    if (scheduler && !scheduler->failure_) scheduler->failure_ = std::current_exception();
}

/// Temporal-decoupling bookkeeping for one activity: how far its local time
/// runs ahead of the kernel, and the global quantum bounding that lead.
class QuantumKeeper {
public:
    explicit QuantumKeeper(SimTime global_quantum = {}) : global_quantum_(global_quantum) {}

    SimTime local_offset() const { return local_offset_; }
    SimTime global_quantum() const { return global_quantum_; }
    SimTime current_time(const Scheduler& s) const { return s.now() + local_offset_; }

    void advance(SimTime t) { local_offset_ += t; }

    /// A zero quantum means every activity synchronizes after every step.
    bool need_sync() const { return local_offset_ >= global_quantum_; }

    /// Usage: `co_await qk.sync(scheduler);`. The caller resumes at
    /// now + offset with the offset cleared.
    Scheduler::WaitAwaiter sync(Scheduler& s) { return s.wait(std::exchange(local_offset_, SimTime{})); }

private:
    SimTime local_offset_;
    SimTime global_quantum_;
};

} // namespace tlmforge
