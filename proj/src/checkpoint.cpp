#include "dsbr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; raw writes assume a LE host");

namespace dsbr {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kFeatureVersion = 1;

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw std::runtime_error(std::string("checkpoint: truncated file while reading ") + what);
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
  T v;
  read_bytes(in, &v, sizeof(T), what);
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Param>& params,
                     const std::string& run_json) {
  auto out = open_out(path);
  write_bytes(out, "DSBR", 4);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  nlohmann::ordered_json meta;
  meta["format"] = "DSBR";
  meta["version"] = kCheckpointVersion;
  if (!run_json.empty()) meta["run"] = nlohmann::ordered_json::parse(run_json);
  auto tensors = nlohmann::ordered_json::object();
  for (const auto& p : params) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    write_bytes(out, p.name.data(), p.name.size());
    write_pod<std::uint32_t>(out, 2);
    write_pod<std::uint64_t>(out, p.tensor.rows());
    write_pod<std::uint64_t>(out, p.tensor.cols());
    write_bytes(out, p.tensor.values().data(), p.tensor.size() * sizeof(double));
    tensors[p.name] = {p.tensor.rows(), p.tensor.cols()};
  }
  meta["tensors"] = tensors;
  std::ofstream side(path + ".meta.json", std::ios::trunc);
  side << meta.dump(2) << "\n";
}

std::vector<Param> load_checkpoint(const std::string& path) {
  auto in = open_in(path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, "DSBR", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  auto count = read_pod<std::uint32_t>(in, "tensor count");
  std::vector<Param> params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = read_pod<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    read_bytes(in, name.data(), name_len, "name");
    auto rank = read_pod<std::uint32_t>(in, "rank");
    if (rank == 0 || rank > 2)
      throw std::runtime_error("checkpoint: unsupported rank for tensor " + name);
    std::uint64_t rows = 1, cols = 1;
    if (rank == 1) {
      cols = read_pod<std::uint64_t>(in, "dims");
    } else {
      rows = read_pod<std::uint64_t>(in, "dims");
      cols = read_pod<std::uint64_t>(in, "dims");
    }
    std::vector<double> data(rows * cols);
    read_bytes(in, data.data(), data.size() * sizeof(double), name.c_str());
    params.push_back({std::move(name),
                      Tensor::of(static_cast<std::size_t>(rows),
                                 static_cast<std::size_t>(cols), std::move(data), true)});
  }
  return params;
}

std::string load_checkpoint_run_json(const std::string& path) {
  std::ifstream side(path + ".meta.json");
  if (!side) throw std::runtime_error("cannot open for reading: " + path + ".meta.json");
  nlohmann::ordered_json meta = nlohmann::ordered_json::parse(side);
  if (!meta.contains("run")) return "";
  return meta["run"].dump();
}

void save_features(const std::string& path, const FeatureFile& f) {
  if (f.data.size() != f.ids.size() * f.dim)
    throw std::invalid_argument("save_features: data size does not match ids x dim");
  auto out = open_out(path);
  write_bytes(out, "DSFT", 4);
  write_pod<std::uint32_t>(out, kFeatureVersion);
  write_pod<std::uint64_t>(out, f.ids.size());
  write_pod<std::uint64_t>(out, f.dim);
  for (const auto& id : f.ids) {
    if (id.find('\n') != std::string::npos)
      throw std::invalid_argument("save_features: item id contains a newline: " + id);
    write_bytes(out, id.data(), id.size());
    write_bytes(out, "\n", 1);
  }
  write_bytes(out, f.data.data(), f.data.size() * sizeof(double));
  nlohmann::ordered_json meta;
  meta["format"] = "DSFT";
  meta["version"] = kFeatureVersion;
  meta["items"] = f.ids.size();
  meta["dim"] = f.dim;
  std::ofstream side(path + ".meta.json", std::ios::trunc);
  side << meta.dump(2) << "\n";
}

FeatureFile load_features(const std::string& path) {
  auto in = open_in(path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, "DSFT", 4) != 0)
    throw std::runtime_error("feature file: bad magic in " + path);
  auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kFeatureVersion)
    throw std::runtime_error("feature file: unsupported version " + std::to_string(version));
  auto n = read_pod<std::uint64_t>(in, "item count");
  auto dim = read_pod<std::uint64_t>(in, "dim");
  FeatureFile f;
  f.dim = static_cast<std::size_t>(dim);
  f.ids.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string id;
    if (!std::getline(in, id))
      throw std::runtime_error("feature file: truncated manifest in " + path);
    f.ids.push_back(std::move(id));
  }
  f.data.resize(static_cast<std::size_t>(n * dim));
  read_bytes(in, f.data.data(), f.data.size() * sizeof(double), "feature rows");
  return f;
}

}  // namespace dsbr
