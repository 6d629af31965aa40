#include "fanns/index.hpp"

#include <fstream>
#include <string>

#include "fanns/errors.hpp"
#include "fanns/hnsw.hpp"
#include "fanns/ivf.hpp"

namespace fanns {

std::string_view index_kind_name(IndexKind kind) {
  switch (kind) {
    case IndexKind::kHnsw:
      return "hnsw";
    case IndexKind::kIvfFlat:
      return "ivfflat";
  }
  return "unknown";
}

SearchResult Index::search_dual_pool(const Corpus&, std::span<const float>, std::size_t,
                                     std::uint32_t, const FilterMask&) const {
  throw ConfigError("dual-pool search is not supported by " +
                    std::string(index_kind_name(kind())) + " indexes");
}

void Index::check_compatible(const Corpus& corpus, std::span<const float> query) const {
  if (corpus.size() != size() || corpus.dim() != dim()) {
    throw InputError("corpus (" + std::to_string(corpus.size()) + " x " +
                     std::to_string(corpus.dim()) + ") does not match index (" +
                     std::to_string(size()) + " x " + std::to_string(dim()) + ")");
  }
  if (query.size() != dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) +
                     " does not match index dimension " + std::to_string(dim()));
  }
}

std::unique_ptr<Index> load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4) throw FormatError("'" + path.string() + "': file too short");
  const std::string tag(magic, 4);
  if (tag == "FHN1") return std::make_unique<HnswIndex>(HnswIndex::load(path));
  if (tag == "FIV1") return std::make_unique<IvfIndex>(IvfIndex::load(path));
  throw FormatError("'" + path.string() + "': unknown index magic");
}

}  // namespace fanns
