#pragma once

// Little-endian binary containers (POFF offsets, PAVW weights, PTEN tensors,
// PSAL saliency maps), Netpbm rasters and key=value configuration files.
// Every encoder is deterministic, so write -> read -> write is byte-stable.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paver/geometry.hpp"
#include "paver/patch_embed.hpp"
#include "paver/tensor.hpp"

namespace paver::io {

using Bytes = std::string;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Offset tables.
Bytes encode_offsets(const geom::OffsetTable& table);
geom::OffsetTable decode_offsets(std::string_view bytes);
void write_offsets(const std::filesystem::path& path, const geom::OffsetTable& table);
geom::OffsetTable read_offsets(const std::filesystem::path& path);

// Named tensor containers.
struct NamedTensor {
  std::string name;
  nn::TensorF tensor;
};

class WeightContainer {
 public:
  /// Throws ConfigError on a duplicate or over-long name.
  void add(std::string name, nn::TensorF tensor);
  void add(std::string name, const nn::Tensor& tensor) { add(std::move(name), nn::tensor_cast<float>(tensor)); }

  const nn::TensorF* find(std::string_view name) const;
  const nn::TensorF& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const WeightContainer&, const WeightContainer&);

 private:
  std::vector<NamedTensor> entries_;
};

Bytes encode_weights(const WeightContainer& container);
WeightContainer decode_weights(std::string_view bytes);
void write_weights(const std::filesystem::path& path, const WeightContainer& container);
WeightContainer read_weights(const std::filesystem::path& path);

// Raw tensors.
Bytes encode_tensor(const nn::TensorF& tensor);
nn::TensorF decode_tensor(std::string_view bytes);
void write_tensor(const std::filesystem::path& path, const nn::TensorF& tensor);
nn::TensorF read_tensor(const std::filesystem::path& path);

// Dense saliency maps [T, H, W].
Bytes encode_saliency(const nn::Tensor& maps);
nn::Tensor decode_saliency(std::string_view bytes);
void write_saliency(const std::filesystem::path& path, const nn::Tensor& maps);
nn::Tensor read_saliency(const std::filesystem::path& path);

// Netpbm. Samples map linearly between [0, 1] and [0, maxval]; writing
// clamps and rounds to 8 bits.
Bytes encode_ppm(const Frame& frame);
Frame decode_ppm(std::string_view bytes, geom::Format format = geom::Format::erp);
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path, geom::Format format = geom::Format::erp);

Bytes encode_pgm(const nn::Tensor& plane);
nn::Tensor decode_pgm(std::string_view bytes);
void write_pgm(const std::filesystem::path& path, const nn::Tensor& plane);
nn::Tensor read_pgm(const std::filesystem::path& path);

/// Frames of one clip: a directory of frame_%05d.ppm (or *.pten [3, H, W])
/// files in name order, or a single .pten file holding [T, 3, H, W].
std::vector<Frame> read_clip(const std::filesystem::path& path, geom::Format format);
std::string frame_file_name(std::size_t index);

/// Plain key=value lines. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Throws ConfigError naming the first key not in `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace paver::io
