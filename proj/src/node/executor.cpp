#include "dxq/node/executor.hpp"

namespace dxq::node {

ThreadExecutor::~ThreadExecutor()
{
    std::list<Worker> workers;
    {
        std::lock_guard lock(mutex_);
        workers.swap(workers_);
    }
    workers.clear();
}

void ThreadExecutor::submit(std::function<void()> task)
{
    std::lock_guard lock(mutex_);
    std::erase_if(workers_, [](const Worker& w) { return w.done->load(); });
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({done, std::jthread([task = std::move(task), done] {
                            task();
                            done->store(true);
                        })});
}

void ManualExecutor::submit(std::function<void()> task)
{
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(task));
}

std::size_t ManualExecutor::run_pending()
{
    std::size_t ran = 0;
    for (;;) {
        std::function<void()> task;
        {
            std::lock_guard lock(mutex_);
            if (queue_.empty())
                return ran;
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
        ++ran;
    }
}

std::size_t ManualExecutor::pending() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

} // namespace dxq::node
