#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>

#include <unistd.h>

#include "oracles.hpp"
#include "paver/errors.hpp"
#include "paver/io.hpp"

namespace paver::io {
namespace {

namespace fs = std::filesystem;

// Little-endian byte builders, independent of the library writer.
struct Builder {
  Bytes out;
  Builder& raw(std::string_view s) {
    out += s;
    return *this;
  }
  Builder& u8(unsigned v) {
    out.push_back(static_cast<char>(v & 0xff));
    return *this;
  }
  Builder& u16(unsigned v) { return u8(v).u8(v >> 8); }
  Builder& u32(std::uint32_t v) { return u8(v).u8(v >> 8).u8(v >> 16).u8(v >> 24); }
  Builder& f32(float f) { return u32(std::bit_cast<std::uint32_t>(f)); }
};

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("paver_io_" + std::to_string(::getpid()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Offsets, ByteLayout) {
  const geom::GridConfig cfg{4, 2, 2};
  const geom::OffsetTable t = geom::identity_offset_table(cfg);
  Builder b;
  b.raw("POFF").u32(1).u8(0).u32(4).u32(2).u32(2);
  for (const geom::PixelCoord& p : t.taps()) b.f32(static_cast<float>(p.u)).f32(static_cast<float>(p.v));
  EXPECT_EQ(encode_offsets(t), b.out);
  EXPECT_EQ(b.out.size(), 4 + 4 + 1 + 12 + 2u * 4 * 2 * 4);
  EXPECT_EQ(decode_offsets(b.out), t);
}

TEST(Offsets, RoundTripIsByteStable) {
  TempDir dir;
  for (geom::Format f : {geom::Format::erp, geom::Format::cmp, geom::Format::tsp}) {
    const geom::GridConfig cfg{f == geom::Format::cmp ? 48 : 64, 32, 8};
    const geom::OffsetTable t = geom::compute_offset_table(cfg, f);
    const fs::path p = dir.path() / "t.poff";
    write_offsets(p, t);
    const geom::OffsetTable back = read_offsets(p);
    EXPECT_EQ(back.format(), f);
    EXPECT_EQ(back.config().width, cfg.width);
    for (std::size_t i = 0; i < t.taps().size(); ++i) {
      EXPECT_EQ(back.taps()[i].u, static_cast<double>(static_cast<float>(t.taps()[i].u)));
      EXPECT_EQ(back.taps()[i].v, static_cast<double>(static_cast<float>(t.taps()[i].v)));
    }
    EXPECT_EQ(encode_offsets(back), read_file(p));
  }
}

TEST(Offsets, CorruptInputRejected) {
  const Bytes good = encode_offsets(geom::identity_offset_table({4, 2, 2}));
  Bytes bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_offsets(bad_magic), FormatError);
  Bytes bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_offsets(bad_version), FormatError);
  Bytes bad_format = good;
  bad_format[8] = 7;
  EXPECT_THROW(decode_offsets(bad_format), FormatError);
  EXPECT_THROW(decode_offsets(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(decode_offsets(good + "x"), FormatError);
  EXPECT_THROW(decode_offsets(""), FormatError);
  // Patch side that does not divide the raster.
  Builder b;
  b.raw("POFF").u32(1).u8(0).u32(5).u32(2).u32(2);
  EXPECT_THROW(decode_offsets(b.out), FormatError);
}

TEST(Weights, ByteLayout) {
  WeightContainer c;
  c.add("a.w", nn::TensorF({2, 1}, {1.5f, -2.0f}));
  c.add("b", nn::TensorF({1}, {0.25f}));
  Builder b;
  b.raw("PAVW").u32(1).u32(2);
  b.u16(3).raw("a.w").u8(0).u8(2).u32(2).u32(1).f32(1.5f).f32(-2.0f);
  b.u16(1).raw("b").u8(0).u8(1).u32(1).f32(0.25f);
  EXPECT_EQ(encode_weights(c), b.out);
  EXPECT_TRUE(decode_weights(b.out) == c);
}

TEST(Weights, RoundTripAndLookup) {
  TempDir dir;
  nn::Rng rng(1);
  WeightContainer c;
  c.add("fusion.spatial.q.weight", oracle::random_tensor({4, 4}, rng));
  c.add("encoder.cls_token", oracle::random_tensor({4}, rng));
  c.add("scalar_like", nn::TensorF({1, 1, 1}, {3.0f}));
  write_weights(dir.path() / "w.pavw", c);
  const WeightContainer back = read_weights(dir.path() / "w.pavw");
  EXPECT_TRUE(back == c);
  EXPECT_EQ(encode_weights(back), read_file(dir.path() / "w.pavw"));
  EXPECT_TRUE(back.contains("encoder.cls_token"));
  EXPECT_EQ(back.find("missing"), nullptr);
  EXPECT_THROW(back.at("missing"), ConfigError);
  EXPECT_EQ(back.entries()[0].name, "fusion.spatial.q.weight");
}

TEST(Weights, RejectsDuplicatesAndCorruption) {
  WeightContainer c;
  c.add("x", nn::TensorF({1}, {1.0f}));
  EXPECT_THROW(c.add("x", nn::TensorF({1}, {2.0f})), ConfigError);
  EXPECT_THROW(c.add(std::string(70000, 'n'), nn::TensorF({1})), ConfigError);

  Builder dup;
  dup.raw("PAVW").u32(1).u32(2);
  dup.u16(1).raw("x").u8(0).u8(1).u32(1).f32(1);
  dup.u16(1).raw("x").u8(0).u8(1).u32(1).f32(2);
  EXPECT_THROW(decode_weights(dup.out), FormatError);

  Builder dtype;
  dtype.raw("PAVW").u32(1).u32(1).u16(1).raw("x").u8(1).u8(1).u32(1).f32(1);
  EXPECT_THROW(decode_weights(dtype.out), FormatError);

  const Bytes good = encode_weights(c);
  for (std::size_t cut = 0; cut < good.size(); ++cut) EXPECT_THROW(decode_weights(good.substr(0, cut)), FormatError);
  EXPECT_THROW(decode_weights(good + '\0'), FormatError);
}

TEST(Tensors, ByteLayoutAndRoundTrip) {
  const nn::TensorF t({1, 2, 2}, {1, 2, 3, 4});
  Builder b;
  b.raw("PTEN").u8(3).u32(1).u32(2).u32(2).f32(1).f32(2).f32(3).f32(4);
  EXPECT_EQ(encode_tensor(t), b.out);
  EXPECT_TRUE(decode_tensor(b.out) == t);
  TempDir dir;
  nn::Rng rng(2);
  const nn::TensorF r = nn::tensor_cast<float>(oracle::random_tensor({2, 3, 4, 5}, rng));
  write_tensor(dir.path() / "r.pten", r);
  EXPECT_TRUE(read_tensor(dir.path() / "r.pten") == r);
  EXPECT_THROW(decode_tensor(b.out.substr(0, 10)), FormatError);
  EXPECT_THROW(decode_tensor("PTEX" + b.out.substr(4)), FormatError);
}

TEST(Saliency, ByteLayoutAndRoundTrip) {
  const nn::Tensor m({2, 1, 3}, {0, 0.5, 1, 0.25, 0.75, 0.125});
  Builder b;
  b.raw("PSAL").u32(3).u32(1).u32(2);
  for (double v : m.values()) b.f32(static_cast<float>(v));
  EXPECT_EQ(encode_saliency(m), b.out);
  EXPECT_TRUE(decode_saliency(b.out) == m);
  TempDir dir;
  write_saliency(dir.path() / "m.psal", m);
  EXPECT_TRUE(read_saliency(dir.path() / "m.psal") == m);
  EXPECT_THROW(decode_saliency(b.out.substr(0, b.out.size() - 2)), FormatError);
  nn::Tensor huge = m;
  huge[0] = 1e300;
  EXPECT_THROW(encode_saliency(huge), NumericError);
}

TEST(Netpbm, PpmLayoutAndQuantisation) {
  Frame f(geom::Format::erp, 2, 1);
  const double px[2][3] = {{0.0, 1.0, 0.5}, {-0.2, 1.7, 100.0 / 255.0}};
  for (int x = 0; x < 2; ++x)
    for (int c = 0; c < 3; ++c) f.at(c, 0, x) = px[x][c];
  Bytes want = "P6\n2 1\n255\n";
  for (unsigned v : {0u, 255u, 128u, 0u, 255u, 100u}) want.push_back(static_cast<char>(v));
  EXPECT_EQ(encode_ppm(f), want);
  const Frame back = decode_ppm(want);
  EXPECT_EQ(back.at(1, 0, 0), 1.0);
  EXPECT_EQ(back.at(2, 0, 0), 128.0 / 255.0);
  EXPECT_EQ(encode_ppm(back), want);
}

TEST(Netpbm, HeaderCommentsAndMaxval) {
  Bytes in = "P6 # comment\n# another\n1   1\n15\n";
  for (unsigned v : {15u, 0u, 5u}) in.push_back(static_cast<char>(v));
  const Frame f = decode_ppm(in, geom::Format::erp);
  EXPECT_EQ(f.at(0, 0, 0), 1.0);
  EXPECT_EQ(f.at(2, 0, 0), 5.0 / 15.0);
  EXPECT_THROW(decode_ppm("P6\n1 1\n65535\n\0\0\0\0\0\0"), FormatError);
  EXPECT_THROW(decode_ppm("P3\n1 1\n255\n1 2 3\n"), FormatError);
  EXPECT_THROW(decode_ppm("P6\n2 2\n255\nabc"), FormatError);
}

TEST(Netpbm, PgmRoundTrip) {
  TempDir dir;
  nn::Tensor plane({3, 4});
  for (std::size_t i = 0; i < 12; ++i) plane[i] = static_cast<double>(i * 20) / 255.0;
  write_pgm(dir.path() / "p.pgm", plane);
  const Bytes bytes = read_file(dir.path() / "p.pgm");
  EXPECT_EQ(bytes.substr(0, 11), "P5\n4 3\n255\n");
  EXPECT_EQ(static_cast<unsigned char>(bytes[11 + 5]), 100u);
  const nn::Tensor back = read_pgm(dir.path() / "p.pgm");
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(back[i], plane[i], 1e-15);
  EXPECT_THROW(decode_pgm("P6\n1 1\n255\nabc"), FormatError);
}

TEST(Clips, DirectoryAndTensorSources) {
  TempDir dir;
  fs::create_directories(dir.path() / "clip");
  nn::Rng rng(3);
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < 3; ++i) {
    Frame f = oracle::random_frame(8, 4, rng);
    write_ppm(dir.path() / "clip" / frame_file_name(i), f);
    frames.push_back(decode_ppm(encode_ppm(f)));
  }
  EXPECT_EQ(frame_file_name(7), "frame_00007.ppm");
  const auto clip = read_clip(dir.path() / "clip", geom::Format::erp);
  ASSERT_EQ(clip.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(clip[i].pixels == frames[i].pixels);

  const nn::TensorF stack = nn::tensor_cast<float>(oracle::random_tensor({2, 3, 4, 8}, rng, 0, 1));
  write_tensor(dir.path() / "s.pten", stack);
  const auto tclip = read_clip(dir.path() / "s.pten", geom::Format::erp);
  ASSERT_EQ(tclip.size(), 2u);
  EXPECT_EQ(tclip[1].at(2, 3, 7), static_cast<double>(stack[stack.size() - 1]));
  EXPECT_THROW(read_clip(dir.path() / "missing", geom::Format::erp), std::exception);
}

TEST(Config, ParsesKeyValueLines) {
  const KeyValueConfig c = KeyValueConfig::parse("# training\n lr = 0.001 \n\nepochs=5\nT = 5\r\nlr=2e-3\nname = a b\n");
  EXPECT_EQ(c.get("lr"), "2e-3");
  EXPECT_EQ(c.get_double("lr"), 2e-3);
  EXPECT_EQ(c.get_int("epochs"), 5);
  EXPECT_EQ(c.get_int("T"), 5);
  EXPECT_EQ(c.get("name"), "a b");
  EXPECT_FALSE(c.get("missing").has_value());
  EXPECT_NO_THROW(c.require_known({"lr", "epochs", "T", "name"}));
  EXPECT_THROW(c.require_known({"lr", "epochs"}), ConfigError);
}

TEST(Config, RejectsMalformedLines) {
  EXPECT_THROW(KeyValueConfig::parse("just a line\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("= 3\n"), ConfigError);
  const KeyValueConfig c = KeyValueConfig::parse("lr = fast\nepochs = 2.5\n");
  EXPECT_THROW(c.get_double("lr"), ConfigError);
  EXPECT_THROW(c.get_int("epochs"), ConfigError);
}

}  // namespace
}  // namespace paver::io
