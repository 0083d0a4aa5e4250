#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include "spectralds/spectralds.hpp"

using namespace spectralds;

TEST(Parallel, VisitsEveryIndexOnce) {
  for (std::size_t threads : {1u, 2u, 5u}) {
    set_thread_count(threads);
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) ASSERT_EQ(h.load(), 1);
  }
  set_thread_count(0);
  parallel_for(0, [](std::size_t) { FAIL(); });
}

TEST(Parallel, PropagatesExceptions) {
  set_thread_count(4);
  EXPECT_THROW(parallel_for(100, [](std::size_t i) {
                 if (i == 37) throw DomainError("boom");
               }),
               DomainError);
  set_thread_count(0);
}

TEST(Parallel, ThreadCountPrecedence) {
  set_thread_count(0);
  EXPECT_EQ(thread_override(), 0u);
  ::setenv("SPECTRALDS_THREADS", "3", 1);
  EXPECT_EQ(thread_count(), 3u);
  set_thread_count(2);
  EXPECT_EQ(thread_count(), 2u);
  EXPECT_EQ(thread_override(), 2u);
  set_thread_count(0);
  ::setenv("SPECTRALDS_THREADS", "garbage", 1);
  EXPECT_GE(thread_count(), 1u);
  ::unsetenv("SPECTRALDS_THREADS");
  EXPECT_GE(thread_count(), 1u);
}

TEST(Streams, IndependentOfCallOrder) {
  const std::uint64_t a = stream_seed(1, "x", 2);
  EXPECT_EQ(stream_seed(1, "x", 2), a);
  EXPECT_NE(stream_seed(1, "x", 3), a);
  EXPECT_NE(stream_seed(1, "y", 2), a);
  EXPECT_NE(stream_seed(2, "x", 2), a);
  auto e1 = make_stream(5, "train", 0);
  auto e2 = make_stream(5, "train", 0);
  EXPECT_EQ(e1(), e2());
}
