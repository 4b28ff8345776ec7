#include "paver/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "paver/errors.hpp"

namespace paver::io {

namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void magic(std::string_view m) { out_.append(m); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xffu));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { out_.append(s); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : in_(bytes), what_(what) {}

  void magic(std::string_view m) {
    if (in_.substr(0, m.size()) != m) fail("bad magic, expected \"" + std::string(m) + "\"");
    pos_ = m.size();
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    return static_cast<std::uint16_t>(lo | (u8() << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_end() const {
    if (pos_ != in_.size()) fail(std::to_string(in_.size() - pos_) + " trailing bytes");
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(std::string(what_) + ": " + msg); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  const char* what_;
};

void write_dims(Writer& w, const nn::Dims& dims) {
  if (dims.size() > 255) throw ConfigError("tensor rank exceeds 255");
  w.u8(static_cast<std::uint8_t>(dims.size()));
  for (std::size_t d : dims) {
    if (d > 0xffffffffu) throw ConfigError("tensor dimension exceeds 32 bits");
    w.u32(static_cast<std::uint32_t>(d));
  }
}

nn::Dims read_dims(Reader& r) {
  nn::Dims dims(r.u8());
  for (auto& d : dims) d = r.u32();
  return dims;
}

nn::TensorF read_payload(Reader& r, nn::Dims dims) {
  const std::size_t n = nn::dims_product(dims);
  if (r.remaining() / 4 < n) r.fail("truncated payload");
  std::vector<float> data(n);
  for (float& x : data) x = r.f32();
  return nn::TensorF(std::move(dims), std::move(data));
}

void require_finite_f32(const nn::Tensor& t, const char* what) {
  for (double x : t.values()) {
    if (!std::isfinite(static_cast<float>(x))) throw NumericError(what, "value not representable as a finite float");
  }
}

// Netpbm header: magic, then width, height, maxval separated by whitespace
// and optional comments, then a single whitespace byte.
struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(std::string_view bytes, std::string_view magic, const char* what) {
  if (bytes.substr(0, 2) != magic) throw FormatError(std::string(what) + ": expected " + std::string(magic));
  std::size_t pos = 2;
  auto next_int = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    int value = 0;
    const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
    if (ec != std::errc() || value <= 0) throw FormatError(std::string(what) + ": malformed header");
    pos = static_cast<std::size_t>(ptr - bytes.data());
    return value;
  };
  PnmHeader h;
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (h.maxval > 255) throw FormatError(std::string(what) + ": only 8-bit rasters are supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError(std::string(what) + ": malformed header");
  }
  h.data_offset = pos + 1;
  return h;
}

std::uint8_t quantize(double v) {
  if (!std::isfinite(v)) v = 0.0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

Bytes encode_offsets(const geom::OffsetTable& table) {
  const auto& cfg = table.config();
  Writer w;
  w.magic("POFF");
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(table.format()));
  w.u32(static_cast<std::uint32_t>(cfg.width));
  w.u32(static_cast<std::uint32_t>(cfg.height));
  w.u32(static_cast<std::uint32_t>(cfg.patch));
  for (const auto& p : table.taps()) {
    w.f32(static_cast<float>(p.u));
    w.f32(static_cast<float>(p.v));
  }
  return w.take();
}

geom::OffsetTable decode_offsets(std::string_view bytes) {
  Reader r(bytes, "offset table");
  r.magic("POFF");
  if (r.u32() != kVersion) r.fail("unsupported version");
  const std::uint8_t fmt = r.u8();
  if (fmt > 2) r.fail("unknown format id " + std::to_string(fmt));
  geom::GridConfig cfg;
  cfg.width = static_cast<int>(r.u32());
  cfg.height = static_cast<int>(r.u32());
  cfg.patch = static_cast<int>(r.u32());
  const auto format = static_cast<geom::Format>(fmt);
  try {
    cfg.validate(format);
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  const std::size_t n = static_cast<std::size_t>(cfg.num_patches()) * static_cast<std::size_t>(cfg.patch * cfg.patch);
  if (r.remaining() != n * 8) r.fail("expected " + std::to_string(n) + " taps");
  std::vector<geom::PixelCoord> taps(n);
  for (auto& p : taps) {
    p.u = r.f32();
    p.v = r.f32();
  }
  r.expect_end();
  return geom::OffsetTable(format, cfg, std::move(taps));
}

void write_offsets(const std::filesystem::path& path, const geom::OffsetTable& table) {
  write_file(path, encode_offsets(table));
}

geom::OffsetTable read_offsets(const std::filesystem::path& path) { return decode_offsets(read_file(path)); }

void WeightContainer::add(std::string name, nn::TensorF tensor) {
  if (name.empty() || name.size() > 0xffff) throw ConfigError("tensor name must have 1..65535 bytes");
  if (contains(name)) throw ConfigError("duplicate tensor name \"" + name + "\"");
  entries_.push_back({std::move(name), std::move(tensor)});
}

const nn::TensorF* WeightContainer::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

const nn::TensorF& WeightContainer::at(std::string_view name) const {
  const auto* t = find(name);
  if (t == nullptr) throw ConfigError("weights: missing tensor \"" + std::string(name) + "\"");
  return *t;
}

bool operator==(const WeightContainer& a, const WeightContainer& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name || !(a.entries_[i].tensor == b.entries_[i].tensor)) return false;
  }
  return true;
}

Bytes encode_weights(const WeightContainer& container) {
  Writer w;
  w.magic("PAVW");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(container.size()));
  for (const auto& e : container.entries()) {
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name);
    w.u8(0);
    write_dims(w, e.tensor.dims());
    for (float x : e.tensor.values()) w.f32(x);
  }
  return w.take();
}

WeightContainer decode_weights(std::string_view bytes) {
  Reader r(bytes, "weights");
  r.magic("PAVW");
  if (r.u32() != kVersion) r.fail("unsupported version");
  const std::uint32_t count = r.u32();
  WeightContainer c;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.raw(r.u16()));
    if (r.u8() != 0) r.fail("tensor \"" + name + "\" has an unsupported dtype");
    nn::TensorF t = read_payload(r, read_dims(r));
    try {
      c.add(std::move(name), std::move(t));
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
  }
  r.expect_end();
  return c;
}

void write_weights(const std::filesystem::path& path, const WeightContainer& container) {
  write_file(path, encode_weights(container));
}

WeightContainer read_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

Bytes encode_tensor(const nn::TensorF& tensor) {
  Writer w;
  w.magic("PTEN");
  write_dims(w, tensor.dims());
  for (float x : tensor.values()) w.f32(x);
  return w.take();
}

nn::TensorF decode_tensor(std::string_view bytes) {
  Reader r(bytes, "tensor");
  r.magic("PTEN");
  nn::TensorF t = read_payload(r, read_dims(r));
  r.expect_end();
  return t;
}

void write_tensor(const std::filesystem::path& path, const nn::TensorF& tensor) {
  write_file(path, encode_tensor(tensor));
}

nn::TensorF read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

Bytes encode_saliency(const nn::Tensor& maps) {
  if (maps.rank() != 3) throw ConfigError("saliency maps must be [T, H, W]");
  require_finite_f32(maps, "write saliency");
  Writer w;
  w.magic("PSAL");
  w.u32(static_cast<std::uint32_t>(maps.dim(2)));
  w.u32(static_cast<std::uint32_t>(maps.dim(1)));
  w.u32(static_cast<std::uint32_t>(maps.dim(0)));
  for (double x : maps.values()) w.f32(static_cast<float>(x));
  return w.take();
}

nn::Tensor decode_saliency(std::string_view bytes) {
  Reader r(bytes, "saliency");
  r.magic("PSAL");
  const std::size_t w = r.u32(), h = r.u32(), t = r.u32();
  const nn::TensorF maps = read_payload(r, {t, h, w});
  r.expect_end();
  return nn::tensor_cast<double>(maps);
}

void write_saliency(const std::filesystem::path& path, const nn::Tensor& maps) {
  write_file(path, encode_saliency(maps));
}

nn::Tensor read_saliency(const std::filesystem::path& path) { return decode_saliency(read_file(path)); }

Bytes encode_ppm(const Frame& frame) {
  const int w = frame.width(), h = frame.height();
  Bytes out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(3 * w * h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(quantize(frame.at(c, y, x))));
    }
  }
  return out;
}

Frame decode_ppm(std::string_view bytes, geom::Format format) {
  const PnmHeader hd = parse_pnm_header(bytes, "P6", "ppm");
  const std::size_t n = static_cast<std::size_t>(hd.width) * static_cast<std::size_t>(hd.height) * 3;
  if (bytes.size() - hd.data_offset != n) throw FormatError("ppm: pixel data has the wrong length");
  Frame f(format, hd.width, hd.height);
  const double scale = 1.0 / hd.maxval;
  std::size_t k = hd.data_offset;
  for (int y = 0; y < hd.height; ++y) {
    for (int x = 0; x < hd.width; ++x) {
      for (int c = 0; c < 3; ++c) f.at(c, y, x) = static_cast<unsigned char>(bytes[k++]) * scale;
    }
  }
  return f;
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) { write_file(path, encode_ppm(frame)); }

Frame read_ppm(const std::filesystem::path& path, geom::Format format) {
  return decode_ppm(read_file(path), format);
}

Bytes encode_pgm(const nn::Tensor& plane) {
  if (plane.rank() != 2) throw ConfigError("pgm plane must be [H, W]");
  Bytes out = "P5\n" + std::to_string(plane.dim(1)) + " " + std::to_string(plane.dim(0)) + "\n255\n";
  for (double v : plane.values()) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

nn::Tensor decode_pgm(std::string_view bytes) {
  const PnmHeader hd = parse_pnm_header(bytes, "P5", "pgm");
  const std::size_t n = static_cast<std::size_t>(hd.width) * static_cast<std::size_t>(hd.height);
  if (bytes.size() - hd.data_offset != n) throw FormatError("pgm: pixel data has the wrong length");
  nn::Tensor t({static_cast<std::size_t>(hd.height), static_cast<std::size_t>(hd.width)});
  const double scale = 1.0 / hd.maxval;
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<unsigned char>(bytes[hd.data_offset + i]) * scale;
  return t;
}

void write_pgm(const std::filesystem::path& path, const nn::Tensor& plane) { write_file(path, encode_pgm(plane)); }

nn::Tensor read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.ppm", index);
  return buf;
}

std::vector<Frame> read_clip(const std::filesystem::path& path, geom::Format format) {
  namespace fs = std::filesystem;
  std::vector<Frame> frames;
  if (fs::is_regular_file(path)) {
    const nn::TensorF t = read_tensor(path);
    if (t.rank() != 4 || t.dim(1) != 3) {
      throw FormatError(path.string() + ": clip tensor must be [T, 3, H, W]");
    }
    const std::size_t per = t.size() / t.dim(0);
    for (std::size_t i = 0; i < t.dim(0); ++i) {
      std::vector<double> px(t.values().begin() + static_cast<std::ptrdiff_t>(i * per),
                             t.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
      frames.emplace_back(format, nn::Tensor({3, t.dim(2), t.dim(3)}, std::move(px)));
    }
    return frames;
  }
  if (!fs::is_directory(path)) throw ConfigError("no such clip: " + path.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    const auto ext = entry.path().extension().string();
    if (name.rfind("frame_", 0) == 0 && (ext == ".ppm" || ext == ".pten")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (f.extension() == ".ppm") {
      frames.push_back(read_ppm(f, format));
    } else {
      frames.emplace_back(format, nn::tensor_cast<double>(read_tensor(f)));
    }
  }
  if (frames.empty()) throw ConfigError(path.string() + ": no frame_*.ppm or frame_*.pten files");
  for (const auto& fr : frames) {
    if (fr.pixels.dims() != frames.front().pixels.dims()) {
      throw FormatError(path.string() + ": frames differ in size");
    }
  }
  return frames;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto s = get(key);
  if (!s) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(*s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s->size()) throw ConfigError("config key " + key + ": not a number: " + *s);
  return v;
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
  const auto s = get(key);
  if (!s) return std::nullopt;
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || ptr != s->data() + s->size()) {
    throw ConfigError("config key " + key + ": not an integer: " + *s);
  }
  return v;
}

void KeyValueConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : values_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown config key: " + k);
    }
  }
}

}  // namespace paver::io
