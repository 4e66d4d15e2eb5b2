#pragma once

#include <atomic>
#include <deque>
#include <memory>
#include <functional>
#include <list>
#include <mutex>
#include <thread>

namespace dxq::node {

/// Runs background work such as query fan-out.
class Executor {
public:
    virtual ~Executor() = default;
    virtual void submit(std::function<void()> task) = 0;
};

/// One thread per task; the destructor waits for all of them.
class ThreadExecutor final : public Executor {
public:
    ThreadExecutor() = default;
    ~ThreadExecutor() override;

    ThreadExecutor(const ThreadExecutor&) = delete;
    ThreadExecutor& operator=(const ThreadExecutor&) = delete;

    void submit(std::function<void()> task) override;

private:
    struct Worker {
        std::shared_ptr<std::atomic<bool>> done;
        std::jthread thread;
    };

    std::mutex mutex_;
    std::list<Worker> workers_;
};

/// Queues tasks until run_pending() is called; for deterministic tests.
class ManualExecutor final : public Executor {
public:
    void submit(std::function<void()> task) override;

    /// Runs queued tasks, including ones they submit. Returns how many ran.
    std::size_t run_pending();
    std::size_t pending() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::function<void()>> queue_;
};

} // namespace dxq::node
