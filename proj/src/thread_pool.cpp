// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/thread_pool.hpp"

#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace radgrid {

struct ThreadPool::Impl {
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  std::vector<std::thread> threads;
  const std::function<void(int, int)>* job = nullptr;
  int n_chunks = 0;
  int workers = 0;
  int pending = 0;          // workers that have not finished the current job
  std::uint64_t epoch = 0;  // bumped per job
  bool stopping = false;
  std::vector<std::exception_ptr> errors;

  void worker_loop(int w) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int, int)>* fn;
      int chunks;
      {
        std::unique_lock lk(mu);
        cv_work.wait(lk, [&] { return stopping || epoch != seen; });
        if (stopping) return;
        seen = epoch;
        fn = job;
        chunks = n_chunks;
      }
      // Static round-robin over chunks.
      for (int c = w; c < chunks; c += workers) {
        try {
          (*fn)(c, w);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!errors[w]) errors[w] = std::current_exception();
        }
      }
      {
        std::lock_guard lk(mu);
        if (--pending == 0) cv_done.notify_all();
      }
    }
  }

  void start(int n) {
    workers = n;
    errors.assign(n, nullptr);
    threads.reserve(n);
    for (int w = 0; w < n; ++w)
      threads.emplace_back([this, w] { worker_loop(w); });
  }

  void stop() {
    {
      std::lock_guard lk(mu);
      stopping = true;
    }
    cv_work.notify_all();
    for (auto& t : threads) t.join();
    threads.clear();
    stopping = false;
  }
};

ThreadPool::ThreadPool(int workers) : impl_(new Impl) {
  impl_->start(workers < 1 ? 1 : workers);
}

ThreadPool::~ThreadPool() {
  impl_->stop();
  delete impl_;
}

ThreadPool& ThreadPool::global() {
  static ThreadPool pool(static_cast<int>(std::thread::hardware_concurrency()));
  return pool;
}

int ThreadPool::size() const { return impl_->workers; }

void ThreadPool::resize(int workers) {
  if (workers < 1) workers = 1;
  if (workers == impl_->workers) return;
  impl_->stop();
  impl_->start(workers);
}

void ThreadPool::run_chunks(int n_chunks,
                            const std::function<void(int, int)>& fn) {
  if (n_chunks <= 0) return;
  Impl& im = *impl_;
  {
    std::unique_lock lk(im.mu);
    im.job = &fn;
    im.n_chunks = n_chunks;
    im.pending = im.workers;
    im.errors.assign(im.workers, nullptr);
    ++im.epoch;
  }
  im.cv_work.notify_all();
  {
    std::unique_lock lk(im.mu);
    im.cv_done.wait(lk, [&] { return im.pending == 0; });
    im.job = nullptr;
  }
  for (auto& e : im.errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace radgrid
