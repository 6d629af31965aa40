#include <cstdio>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "fanns/corpus.hpp"
#include "fanns/errors.hpp"

namespace fanns {

// Layout: "FVC1", u32 N, u32 d, u8 metric, u8 normalized, 2 reserved bytes,
// N*d float32 vectors, N float64 attributes.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  if (corpus.size() > std::numeric_limits<std::uint32_t>::max() ||
      corpus.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw InputError("corpus too large for the FVC1 format");
  }
  detail::BinaryWriter out(path);
  out.magic("FVC1");
  out.put(static_cast<std::uint32_t>(corpus.size()));
  out.put(static_cast<std::uint32_t>(corpus.dim()));
  out.put(static_cast<std::uint8_t>(corpus.metric()));
  out.put(static_cast<std::uint8_t>(corpus.normalized() ? 1 : 0));
  out.put(std::uint16_t{0});
  out.array(corpus.vectors());
  out.array(corpus.attributes());
  out.finish();
}

Corpus load_corpus(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FVC1");
  const auto n = in.get<std::uint32_t>("row count");
  const auto d = in.get<std::uint32_t>("dimension");
  const auto metric = in.get<std::uint8_t>("metric");
  const auto normalized = in.get<std::uint8_t>("normalized flag");
  in.get<std::uint16_t>("reserved bytes");
  if (n == 0 || d == 0) throw FormatError("'" + path.string() + "': empty corpus header");
  if (metric > static_cast<std::uint8_t>(Metric::kCosine)) {
    throw FormatError("'" + path.string() + "': unknown metric code " + std::to_string(metric));
  }
  const std::uint64_t floats = std::uint64_t{n} * d;
  const std::uint64_t expected = floats * sizeof(float) + std::uint64_t{n} * sizeof(double);
  if (expected != in.remaining()) {
    throw FormatError("'" + path.string() + "': header declares " + std::to_string(n) + "x" +
                      std::to_string(d) + " but payload holds " + std::to_string(in.remaining()) +
                      " bytes (expected " + std::to_string(expected) + ")");
  }
  auto vectors = in.array<float>(floats, "vector payload");
  auto attribute = in.array<double>(n, "attribute payload");
  try {
    return Corpus(d, std::move(vectors), std::move(attribute), static_cast<Metric>(metric),
                  normalized != 0);
  } catch (const InputError& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void save_attribute_csv(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "id,attribute\n";
  char buf[64];
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, corpus.attribute(static_cast<RowId>(i)));
    out << buf;
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace fanns
