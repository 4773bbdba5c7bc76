#pragma once

// Binary checkpoint:
//   "COQGCKPT" | u32 version | u64 vocabulary fingerprint | u32 n + config JSON
//   | u32 tensor count | per tensor: u32 n + name, u64 rows, u64 cols, f64 data (column-major)
// Integers and doubles are stored in host (little-endian) byte order.

#include "coqg/corpus/vocabulary.hpp"
#include "coqg/nnet/config.hpp"
#include "coqg/nnet/model.hpp"
#include "coqg/util/atomic_file.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>

namespace coqg::nnet {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'C', 'O', 'Q', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw CheckpointError("checkpoint truncated");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename S>
std::string serialize_checkpoint(const CfNet<S>& model, const corpus::Vocabulary& vocab) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint64_t>(out, vocab.fingerprint());
  const std::string cfg = nlohmann::json(model.config()).dump();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const auto tensors = model.params().tensors();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(t->name.size()));
    out += t->name;
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t->value.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(t->value.cols()));
    for (Eigen::Index k = 0; k < t->value.size(); ++k) detail::put<double>(out, static_cast<double>(t->value(k)));
  }
  return out;
}

template <typename S>
void save_checkpoint(const std::string& path, const CfNet<S>& model, const corpus::Vocabulary& vocab) {
  util::atomic_write(path, serialize_checkpoint(model, vocab));
}

/// Restores a model. Refuses when the vocabulary fingerprint differs or, if
/// given, when the stored architecture differs from `expected`.
template <typename S>
CfNet<S> deserialize_checkpoint(const std::string& data, const corpus::Vocabulary& vocab,
                                const std::optional<ModelConfig>& expected = std::nullopt) {
  detail::Reader in(data);
  if (in.bytes(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic)))
    throw CheckpointError("not a checkpoint file");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  if (in.get<std::uint64_t>() != vocab.fingerprint())
    throw CheckpointError("checkpoint was trained with a different vocabulary");
  const auto cfg_len = in.get<std::uint32_t>();
  ModelConfig config = nlohmann::json::parse(in.bytes(cfg_len)).get<ModelConfig>();
  if (config.vocab_size != vocab.size()) throw CheckpointError("checkpoint vocabulary size mismatch");
  if (expected && !config.same_architecture(*expected))
    throw CheckpointError("checkpoint configuration does not match the requested model configuration");

  Parameters<S> params(config);
  auto tensors = params.tensors();
  const auto count = in.get<std::uint32_t>();
  if (count != tensors.size()) throw CheckpointError("checkpoint tensor count mismatch");
  for (auto* t : tensors) {
    const std::string name = in.bytes(in.get<std::uint32_t>());
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (name != t->name || rows != static_cast<std::uint64_t>(t->value.rows()) ||
        cols != static_cast<std::uint64_t>(t->value.cols()))
      throw CheckpointError("checkpoint tensor '" + name + "' does not match expected '" + t->name + "'");
    for (Eigen::Index k = 0; k < t->value.size(); ++k) t->value(k) = static_cast<S>(in.get<double>());
    t->zero_grad();
  }
  if (!in.done()) throw CheckpointError("trailing bytes in checkpoint");
  return CfNet<S>(config, std::move(params));
}

template <typename S>
CfNet<S> load_checkpoint(const std::string& path, const corpus::Vocabulary& vocab,
                         const std::optional<ModelConfig>& expected = std::nullopt) {
  return deserialize_checkpoint<S>(util::read_file(path), vocab, expected);
}

}  // namespace coqg::nnet
