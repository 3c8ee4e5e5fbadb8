// SPDX-License-Identifier: Apache-2.0
#include "psytraj/pool.hpp"

namespace psytraj {

Pool::Pool(unsigned workers) {
  count_ = workers != 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  if (count_ == 1) return;
  threads_.reserve(count_);
  for (unsigned i = 0; i < count_; ++i) {
    threads_.emplace_back([this, i] { worker_loop(i); });
  }
}

Pool::~Pool() {
  if (threads_.empty()) return;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void Pool::run(const std::function<void(unsigned)>& fn) {
  if (threads_.empty()) {
    fn(0);
    return;
  }
  std::unique_lock<std::mutex> lock(mutex_);
  job_ = &fn;
  remaining_ = count_;
  ++generation_;
  cv_work_.notify_all();
  cv_done_.wait(lock, [this] { return remaining_ == 0; });
  job_ = nullptr;
}

void Pool::worker_loop(unsigned idx) {
  uint64_t seen = 0;
  while (true) {
    const std::function<void(unsigned)>* job = nullptr;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
    }
    (*job)(idx);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (--remaining_ == 0) cv_done_.notify_one();
    }
  }
}

}  // namespace psytraj
