#include "fanns/oracle.hpp"

#include <bit>
#include <limits>

#include "binary_io.hpp"
#include "fanns/errors.hpp"
#include "fanns/kernels.hpp"

namespace fanns {

GroundTruthRow exact_knn(const DistanceComputer& dc, std::size_t k, const FilterMask* mask,
                         std::uint64_t* distance_evaluations) {
  if (k == 0) throw InputError("k must be >= 1");
  const Corpus& corpus = dc.corpus();
  if (mask != nullptr && mask->size() != corpus.size()) {
    throw InputError("mask length does not match corpus size");
  }
  TopK top(k);
  std::uint64_t evaluated = 0;
  if (mask == nullptr) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto id = static_cast<RowId>(i);
      top.push({id, dc(id)});
    }
    evaluated = corpus.size();
  } else {
    const auto words = mask->words();
    for (std::size_t w = 0; w < words.size(); ++w) {
      std::uint64_t bits = words[w];
      while (bits != 0) {
        const auto id = static_cast<RowId>(w * 64 + std::countr_zero(bits));
        bits &= bits - 1;
        top.push({id, dc(id)});
        ++evaluated;
      }
    }
  }
  if (distance_evaluations != nullptr) *distance_evaluations += evaluated;
  return top.take_sorted();
}

GroundTruthRow exact_knn(const Corpus& corpus, std::span<const float> query, std::size_t k,
                         const FilterMask* mask) {
  return exact_knn(DistanceComputer(corpus, query), k, mask);
}

GroundTruth batch_ground_truth(const Corpus& corpus, const QuerySet& queries, std::size_t k,
                               std::span<const FilterMask* const> masks) {
  if (queries.size() == 0) throw InputError("ground truth needs at least one query");
  if (queries.dim != corpus.dim()) throw InputError("query dimension does not match corpus");
  if (k > std::numeric_limits<std::uint32_t>::max()) throw InputError("k too large");
  std::vector<kernels::KnnTask> tasks;
  tasks.reserve(masks.size() * queries.size());
  for (const FilterMask* mask : masks) {
    for (std::size_t q = 0; q < queries.size(); ++q) tasks.push_back({q, mask});
  }
  GroundTruth gt;
  gt.k_max = static_cast<std::uint32_t>(k);
  gt.num_queries = static_cast<std::uint32_t>(queries.size());
  gt.rows = kernels::parallel::batch_exact_knn(corpus, queries, k, tasks);
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  out.magic("FGT1");
  out.put(gt.num_queries);
  out.put(gt.k_max);
  for (const auto& row : gt.rows) {
    out.put(static_cast<std::uint32_t>(row.size()));
    for (const Neighbor& n : row) {
      out.put(n.id);
      out.put(n.distance);
    }
  }
  out.finish();
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FGT1");
  GroundTruth gt;
  gt.num_queries = in.get<std::uint32_t>("query count");
  gt.k_max = in.get<std::uint32_t>("k_max");
  if (gt.num_queries == 0) throw FormatError("'" + path.string() + "': zero queries");
  // Rows run to the end of the file, one block of num_queries rows per mask.
  while (in.remaining() > 0) {
    const auto m = in.get<std::uint32_t>("row length");
    if (m > gt.k_max) throw FormatError("'" + path.string() + "': row longer than k_max");
    GroundTruthRow row(m);
    for (Neighbor& n : row) {
      n.id = in.get<std::uint32_t>("neighbor id");
      n.distance = in.get<float>("neighbor distance");
    }
    gt.rows.push_back(std::move(row));
  }
  if (gt.rows.size() % gt.num_queries != 0) {
    throw FormatError("'" + path.string() + "': " + std::to_string(gt.rows.size()) +
                      " rows is not a multiple of " + std::to_string(gt.num_queries) + " queries");
  }
  return gt;
}

}  // namespace fanns
