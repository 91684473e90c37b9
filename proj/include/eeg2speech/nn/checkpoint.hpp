#pragma once

#include "eeg2speech/nn/models.hpp"

#include <cstring>
#include <fstream>
#include <string>

namespace eeg2speech::nn {

// Layout (little-endian host order):
//   magic "E2SCKPT\0" | u32 version | u32 scalar bytes | u64 seed
//   str kind | str config-json | 4 x vec (input mean, input scale, target mean, target scale)
//   u32 param count | per param: str name | u64 rows | u64 cols | rows*cols scalars (row-major)
// where str = u64 length + bytes and vec = u64 length + doubles.
inline constexpr char kCheckpointMagic[8] = {'E', '2', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : f_(path, std::ios::binary), path_(path) {
    if (!f_) throw DataError("cannot write checkpoint: " + path);
  }
  template <typename T>
  void pod(const T& v) {
    f_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    f_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(const Eigen::RowVectorXd& v) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    f_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void raw(const void* p, std::size_t n) { f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void finish() {
    f_.flush();
    if (!f_) throw DataError("write failed: " + path_);
  }

 private:
  std::ofstream f_;
  std::string path_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : f_(path, std::ios::binary), path_(path) {
    if (!f_) throw DataError("cannot open checkpoint: " + path);
  }
  template <typename T>
  T pod() {
    T v{};
    read(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 30)) throw DataError("checkpoint: implausible string length in " + path_);
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  Eigen::RowVectorXd vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 28)) throw DataError("checkpoint: implausible vector length in " + path_);
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(n));
    read(v.data(), n * sizeof(double));
    return v;
  }
  void read(void* p, std::size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f_.gcount()) != n) throw DataError("checkpoint truncated: " + path_);
  }

 private:
  std::ifstream f_;
  std::string path_;
};

}  // namespace detail

template <typename S>
void save_checkpoint(Model<S>& m, const std::string& path) {
  detail::BinWriter w(path);
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(sizeof(S)));
  w.pod(static_cast<std::uint64_t>(m.seed));
  w.str(m.kind);
  w.str(m.config.dump());
  w.vec(m.input_norm.mean);
  w.vec(m.input_norm.scale);
  w.vec(m.target_norm.mean);
  w.vec(m.target_norm.scale);
  const auto params = m.params();
  w.pod(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.str(p->name);
    w.pod(static_cast<std::uint64_t>(p->value.rows()));
    w.pod(static_cast<std::uint64_t>(p->value.cols()));
    w.raw(p->value.data(), static_cast<std::size_t>(p->value.size()) * sizeof(S));
  }
  w.finish();
}

/// Loads a checkpoint into a freshly built model of the recorded kind.
/// Blobs stored at a different precision are converted.
template <typename S>
Model<S> load_checkpoint(const std::string& path) {
  detail::BinReader r(path);
  char magic[8];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw DataError("not a checkpoint: " + path);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto scalar = r.pod<std::uint32_t>();
  if (scalar != 4 && scalar != 8) throw DataError("checkpoint: bad scalar size " + std::to_string(scalar));
  const auto seed = r.pod<std::uint64_t>();
  const std::string kind = r.str();
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad config: ") + e.what());
  }
  Model<S> m = rebuild_model<S>(kind, config, seed);
  m.input_norm.mean = r.vec();
  m.input_norm.scale = r.vec();
  m.target_norm.mean = r.vec();
  m.target_norm.scale = r.vec();
  const auto params = m.params();
  const auto count = r.pod<std::uint32_t>();
  if (count != params.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " tensors, model has " + std::to_string(params.size()));
  }
  for (auto* p : params) {
    const std::string name = r.str();
    const auto rows = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(r.pod<std::uint64_t>());
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw DataError("checkpoint tensor " + name + " [" + std::to_string(rows) + "x" + std::to_string(cols) +
                      "] does not match " + p->name);
    }
    if (scalar == sizeof(S)) {
      r.read(p->value.data(), static_cast<std::size_t>(p->value.size()) * sizeof(S));
    } else if (scalar == 4) {
      Mat<float> tmp(rows, cols);
      r.read(tmp.data(), static_cast<std::size_t>(tmp.size()) * 4);
      p->value = tmp.template cast<S>();
    } else {
      Mat<double> tmp(rows, cols);
      r.read(tmp.data(), static_cast<std::size_t>(tmp.size()) * 8);
      p->value = tmp.template cast<S>();
    }
  }
  return m;
}

}  // namespace eeg2speech::nn
