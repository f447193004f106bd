#include "topw/trace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace topw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kEmbeddingsFile = "embeddings.f32";
constexpr const char* kLogitsFile = "logits.f32";

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

std::vector<float> read_f32(const fs::path& path, std::size_t expected_count) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  if (ec) throw TraceError("cannot stat " + path.string() + ": " + ec.message());
  const std::uintmax_t expected = expected_count * sizeof(float);
  if (bytes != expected) {
    throw TraceError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                     std::to_string(bytes));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open " + path.string());
  std::vector<float> out(expected_count);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(expected));
  if (!in) throw TraceError("short read from " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& f : out) f = std::bit_cast<float>(to_little(std::bit_cast<std::uint32_t>(f)));
  }
  return out;
}

void write_f32(const fs::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (const float f : values) {
      const std::uint32_t le = to_little(std::bit_cast<std::uint32_t>(f));
      out.write(reinterpret_cast<const char*>(&le), sizeof(le));
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string meta_text(const TraceMeta& meta) {
  json j;
  j["format_version"] = meta.format_version;
  j["n"] = meta.n;
  j["m"] = meta.m;
  j["steps"] = meta.steps;
  j["dtype"] = meta.dtype;
  j["endianness"] = meta.endianness;
  j["layout"] = meta.layout;
  return j.dump(2) + "\n";
}

TraceMeta parse_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw TraceError(path.string() + ": malformed descriptor: " + e.what());
  }
  TraceMeta meta;
  try {
    meta.format_version = j.at("format_version").get<int>();
    meta.n = j.at("n").get<std::size_t>();
    meta.m = j.at("m").get<std::size_t>();
    meta.steps = j.at("steps").get<std::size_t>();
    meta.layout = j.at("layout").get<std::string>();
    meta.dtype = j.value("dtype", std::string("float32"));
    meta.endianness = j.value("endianness", std::string("little"));
  } catch (const json::exception& e) {
    throw TraceError(path.string() + ": " + e.what());
  }
  if (meta.format_version != kTraceFormatVersion) {
    throw TraceError(path.string() + ": unsupported format_version " +
                     std::to_string(meta.format_version) + " (expected " +
                     std::to_string(kTraceFormatVersion) + ")");
  }
  if (meta.layout != "row-major") throw TraceError(path.string() + ": layout must be row-major");
  if (meta.dtype != "float32") throw TraceError(path.string() + ": dtype must be float32");
  if (meta.endianness != "little") throw TraceError(path.string() + ": endianness must be little");
  return meta;
}

}  // namespace

void validate_trace(const TraceBundle& b) {
  const TraceMeta& m = b.meta;
  if (m.n == 0 || m.m == 0 || m.steps == 0) {
    throw TraceError("trace dimensions must be positive (n=" + std::to_string(m.n) +
                     ", m=" + std::to_string(m.m) + ", steps=" + std::to_string(m.steps) + ")");
  }
  if (b.embeddings.size() != m.n * m.m) {
    throw TraceError("embeddings: expected " + std::to_string(m.n * m.m * sizeof(float)) +
                     " bytes, found " + std::to_string(b.embeddings.size() * sizeof(float)));
  }
  if (b.logits.size() != m.steps * m.n) {
    throw TraceError("logits: expected " + std::to_string(m.steps * m.n * sizeof(float)) +
                     " bytes, found " + std::to_string(b.logits.size() * sizeof(float)));
  }
  for (std::size_t k = 0; k < b.embeddings.size(); ++k) {
    if (std::isnan(b.embeddings[k])) {
      throw TraceError("embeddings: NaN at token " + std::to_string(k / m.m) + ", coordinate " +
                       std::to_string(k % m.m));
    }
  }
  for (std::size_t k = 0; k < b.logits.size(); ++k) {
    if (std::isnan(b.logits[k])) {
      throw TraceError("logits: NaN at step " + std::to_string(k / m.n) + ", token " +
                       std::to_string(k % m.n));
    }
  }
}

TraceBundle load_trace(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw TraceError("trace directory not found: " + dir.string());
  TraceBundle b;
  b.meta = parse_meta(dir / kMetaFile);
  b.embeddings = read_f32(dir / kEmbeddingsFile, b.meta.n * b.meta.m);
  b.logits = read_f32(dir / kLogitsFile, b.meta.steps * b.meta.n);
  validate_trace(b);
  return b;
}

void save_trace(const TraceBundle& bundle, const fs::path& dir) {
  validate_trace(bundle);
  fs::create_directories(dir);
  {
    std::ofstream meta(dir / kMetaFile, std::ios::binary | std::ios::trunc);
    if (!meta) throw std::runtime_error("cannot open " + (dir / kMetaFile).string());
    meta << meta_text(bundle.meta);
  }
  write_f32(dir / kEmbeddingsFile, bundle.embeddings);
  write_f32(dir / kLogitsFile, bundle.logits);
}

std::uint64_t trace_digest(const TraceBundle& b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < len; ++k) {
      h ^= p[k];
      h *= 0x100000001b3ull;
    }
  };
  const std::uint64_t dims[3] = {b.meta.n, b.meta.m, b.meta.steps};
  mix(dims, sizeof(dims));
  for (const auto* arr : {&b.embeddings, &b.logits}) {
    for (const float f : *arr) {
      const std::uint32_t le = to_little(std::bit_cast<std::uint32_t>(f));
      mix(&le, sizeof(le));
    }
  }
  return h;
}

TraceBundle synth_trace(const SynthOptions& opt) {
  if (opt.n == 0 || opt.m == 0 || opt.steps == 0) {
    throw std::invalid_argument("synth_trace: n, m and steps must be >= 1");
  }
  if (!(opt.concentration > 0.0)) {
    throw std::invalid_argument("synth_trace: concentration must be positive");
  }
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TraceBundle b;
  b.meta.n = opt.n;
  b.meta.m = opt.m;
  b.meta.steps = opt.steps;
  b.embeddings.resize(opt.n * opt.m);

  if (opt.generator == SynthGenerator::GaussianDirichlet) {
    for (auto& v : b.embeddings) v = static_cast<float>(gauss(rng));
  } else {
    if (opt.clusters == 0) throw std::invalid_argument("synth_trace: clusters must be >= 1");
    std::vector<double> centers(opt.clusters * opt.m);
    for (auto& v : centers) v = gauss(rng);
    for (std::size_t i = 0; i < opt.n; ++i) {
      const double* c = centers.data() + (i % opt.clusters) * opt.m;
      for (std::size_t l = 0; l < opt.m; ++l) {
        b.embeddings[i * opt.m + l] = static_cast<float>(c[l] + opt.cluster_spread * gauss(rng));
      }
    }
  }
  // Guard the (measure-zero) all-zero row so the trace always builds a metric.
  for (std::size_t i = 0; i < opt.n; ++i) {
    bool zero = true;
    for (std::size_t l = 0; l < opt.m; ++l) zero = zero && b.embeddings[i * opt.m + l] == 0.0f;
    if (zero) b.embeddings[i * opt.m] = 1.0f;
  }

  // log Gamma(a) = log Gamma(a + 1) + log(U) / a stays finite for tiny a.
  b.logits.resize(opt.steps * opt.n);
  std::gamma_distribution<double> shape_plus_one(opt.concentration + 1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : b.logits) {
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    v = static_cast<float>(std::log(shape_plus_one(rng)) + std::log(u) / opt.concentration);
  }
  return b;
}

}  // namespace topw
