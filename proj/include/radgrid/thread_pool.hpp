// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <functional>

namespace radgrid {

// Worker pool for the ray-parallel passes. Chunks are assigned to workers
// by static round-robin (worker w takes chunks w, w+T, w+2T, ...), so for a
// fixed pool size the chunk->worker mapping never depends on timing and
// fixed-order reductions over per-worker buffers are reproducible.
class ThreadPool {
 public:
  static ThreadPool& global();

  // Blocks until all in-flight work finishes, then changes the worker count.
  void resize(int workers);
  int size() const;

  // Runs fn(chunk, worker) for every chunk in [0, n_chunks); blocks until
  // done. worker is in [0, size()). Exceptions from fn propagate to the
  // caller (the first one thrown, by worker index).
  void run_chunks(int n_chunks, const std::function<void(int, int)>& fn);

  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

 private:
  explicit ThreadPool(int workers);
  struct Impl;
  Impl* impl_;
};

}  // namespace radgrid
