#include <gtest/gtest.h>

#include <cstring>

#include "fanns/kernels.hpp"
#include "test_util.hpp"

using namespace fanns;

namespace {

template <class T>
bool bit_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

}  // namespace

TEST(Kernels, ComputeKeysSerialAndParallelAgree) {
  for (const Metric m : {Metric::kL2, Metric::kInnerProduct, Metric::kCosine}) {
    const Corpus c = testutil::random_corpus(3001, 20, m, 4, false);
    const auto q = testutil::random_queries(1, 20, 5);
    std::vector<float> a(c.size()), b(c.size());
    kernels::serial::compute_keys(c, q[0], a);
    kernels::parallel::compute_keys(c, q[0], b);
    EXPECT_TRUE(bit_equal(a, b));
    const DistanceComputer dc(c, q[0]);
    for (RowId i = 0; i < c.size(); i += 97) EXPECT_EQ(a[i], dc(i));
  }
}

TEST(Kernels, BatchExactKnnSerialAndParallelAgree) {
  const Corpus c = testutil::random_corpus(2000, 16, Metric::kCosine, 6);
  const auto qs = testutil::random_queries(40, 16, 7);
  const FilterMask m = build_mask(c, 0.8);
  std::vector<kernels::KnnTask> tasks;
  for (std::size_t q = 0; q < qs.size(); ++q) {
    tasks.push_back({q, nullptr});
    tasks.push_back({q, &m});
  }
  const auto s = kernels::serial::batch_exact_knn(c, qs, 25, tasks);
  const auto p = kernels::parallel::batch_exact_knn(c, qs, 25, tasks);
  EXPECT_EQ(s, p);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    EXPECT_EQ(s[t], testutil::selection_sort_knn(c, qs[tasks[t].query], 25, tasks[t].mask));
  }
}

TEST(Kernels, AssignNearestSerialAndParallelAgree) {
  const Corpus c = testutil::random_corpus(5000, 8, Metric::kL2, 8, false);
  const Corpus cents = testutil::random_corpus(37, 8, Metric::kL2, 9, false);
  std::vector<std::uint32_t> ls(c.size()), lp(c.size());
  std::vector<float> ds(c.size()), dp(c.size());
  kernels::serial::assign_nearest(c.vectors(), 8, cents.vectors(), ls, ds);
  kernels::parallel::assign_nearest(c.vectors(), 8, cents.vectors(), lp, dp);
  EXPECT_EQ(ls, lp);
  EXPECT_TRUE(bit_equal(ds, dp));
  for (RowId i = 0; i < c.size(); i += 50) {
    double best = 1e300;
    std::uint32_t arg = 0;
    for (RowId j = 0; j < cents.size(); ++j) {
      const double d = testutil::reference_key(c.row(i), cents.row(j), Metric::kL2);
      if (d < best) best = d, arg = j;
    }
    EXPECT_EQ(ls[i], arg);
  }
}

TEST(Kernels, AssignNearestTiesGoToLowerIndex) {
  const std::vector<float> pts{0, 0};
  const std::vector<float> cents{1, 0, -1, 0, 0, 1};
  std::vector<std::uint32_t> l(1);
  std::vector<float> d(1);
  kernels::parallel::assign_nearest(pts, 2, cents, l, d);
  EXPECT_EQ(l[0], 0u);
  EXPECT_EQ(d[0], 1.0F);
}

TEST(Kernels, AssignByMetricSerialAndParallelAgree) {
  for (const Metric m : {Metric::kL2, Metric::kInnerProduct, Metric::kCosine}) {
    const Corpus c = testutil::random_corpus(4000, 12, m, 10, false);
    const Corpus cents = testutil::random_corpus(29, 12, Metric::kL2, 11, false);
    std::vector<float> norms(cents.size());
    for (RowId j = 0; j < cents.size(); ++j) norms[j] = cents.norm(j);
    std::vector<std::uint32_t> ls(c.size()), lp(c.size());
    kernels::serial::assign_by_metric(c, cents.vectors(), norms, ls);
    kernels::parallel::assign_by_metric(c, cents.vectors(), norms, lp);
    EXPECT_EQ(ls, lp);
    for (RowId i = 0; i < c.size(); i += 100) {
      double best = 1e300;
      for (RowId j = 0; j < cents.size(); ++j) {
        best = std::min(best, testutil::reference_key(c.row(i), cents.row(j), m));
      }
      EXPECT_NEAR(testutil::reference_key(c.row(i), cents.row(ls[i]), m), best, 1e-5);
    }
  }
}

TEST(Kernels, ReportsAtLeastOneThread) { EXPECT_GE(kernels::max_threads(), 1); }
