#include <gtest/gtest.h>

#include <algorithm>

#include "blurscope/synth.hpp"
#include "test_util.hpp"

using namespace blurscope;
using test::TempDir;

TEST(SynthTextureTest, DeterministicUnderSeed) {
  EXPECT_EQ(synth_texture(42, 64, 48), synth_texture(42, 64, 48));
}

TEST(SynthTextureTest, SpansUnitInterval) {
  for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 123456789ULL}) {
    const auto img = synth_texture(seed, 40, 32);
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    EXPECT_EQ(*lo, 0.0);
    EXPECT_EQ(*hi, 1.0);
  }
}

TEST(SynthTextureTest, DistinctSeedsGiveDistinctImages) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = synth_texture(seed, 32, 32);
    const auto b = synth_texture(seed + 1000, 32, 32);
    std::size_t differ = 0;
    for (std::size_t i = 0; i < a.size(); ++i) differ += a.pixels()[i] != b.pixels()[i];
    EXPECT_GE(differ * 100, a.size()) << "seed " << seed;
  }
}

TEST(SynthTextureTest, RejectsTinyImages) { EXPECT_THROW(synth_texture(1, 7, 16), Error); }

TEST(SynthDatasetTest, CountsFilesAndBalance) {
  TempDir dir("synth");
  SynthOptions opt;
  opt.count = 4;
  opt.width = opt.height = 16;
  const auto ds = synth_dataset(opt, dir.path());
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.count(Label::Sharp), 2u);
  EXPECT_EQ(ds.count(Label::Blurry), 2u);
  std::size_t pgm = 0, csv = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    pgm += e.path().extension() == ".pgm";
    csv += e.path().extension() == ".csv";
  }
  EXPECT_EQ(pgm, 4u);
  EXPECT_EQ(csv, 1u);
  EXPECT_EQ(read_labels_csv(dir / "labels.csv"), ds);
}

TEST(SynthDatasetTest, CsvFormat) {
  TempDir dir("synth");
  SynthOptions opt;
  opt.count = 2;
  opt.width = opt.height = 8;
  synth_dataset(opt, dir.path());
  const auto bytes = test::read_bytes(dir / "labels.csv");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()),
            "path,label\nimg_00000_sharp.pgm,sharp\nimg_00000_blurry.pgm,blurry\n");
}

TEST(SynthDatasetTest, ByteIdenticalReruns) {
  TempDir a("synth"), b("synth");
  SynthOptions opt;
  opt.count = 6;
  opt.width = opt.height = 24;
  synth_dataset(opt, a.path());
  synth_dataset(opt, b.path());
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    EXPECT_EQ(test::read_bytes(e.path()), test::read_bytes(b / e.path().filename().string())) << e.path();
  }
}

TEST(SynthDatasetTest, BlurryFilesRegenerateFromSharpCounterparts) {
  TempDir dir("synth");
  SynthOptions opt;
  opt.count = 6;
  opt.sigma_min = opt.sigma_max = 2.0;
  opt.width = opt.height = 32;
  synth_dataset(opt, dir.path());
  for (std::size_t i = 0; i < opt.count / 2; ++i) {
    const auto sharp = load_image(dir / synth_file_name(i, Label::Sharp));
    const auto blurry = load_image(dir / synth_file_name(i, Label::Blurry));
    const auto expected = encode_pgm(gaussian_blur(synth_texture(synth_texture_seed(opt.seed, i), 32, 32), 2.0));
    EXPECT_EQ(test::read_bytes(dir / synth_file_name(i, Label::Blurry)), expected);
    // The file stores a blur of the unquantised texture; blurring the
    // quantised sharp file lands within one quantum.
    const auto reblurred = gaussian_blur(sharp, 2.0);
    for (std::size_t p = 0; p < blurry.size(); ++p) {
      EXPECT_NEAR(blurry.pixels()[p], reblurred.pixels()[p], 1.0 / 255.0 + 1e-12);
    }
  }
}

TEST(SynthDatasetTest, PairIndexStreamsAreIndependentOfCount) {
  TempDir a("synth"), b("synth");
  SynthOptions small;
  small.count = 2;
  small.width = small.height = 16;
  SynthOptions large = small;
  large.count = 8;
  synth_dataset(small, a.path());
  synth_dataset(large, b.path());
  EXPECT_EQ(test::read_bytes(a / synth_file_name(0, Label::Blurry)),
            test::read_bytes(b / synth_file_name(0, Label::Blurry)));
}

TEST(SynthDatasetTest, RejectsBadParameters) {
  TempDir dir("synth");
  auto code = [&](SynthOptions opt) {
    try {
      synth_dataset(opt, dir.path());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoFailure;
  };
  SynthOptions odd;
  odd.count = 3;
  EXPECT_EQ(code(odd), ErrorCode::BadRange);
  SynthOptions inverted;
  inverted.sigma_min = 3.0;
  inverted.sigma_max = 2.0;
  EXPECT_EQ(code(inverted), ErrorCode::BadRange);
  SynthOptions zero;
  zero.sigma_min = 0.0;
  EXPECT_EQ(code(zero), ErrorCode::BadRange);
}

TEST(LabelsCsvTest, RejectsDuplicatesAndBadRows) {
  TempDir dir("csv");
  test::write_bytes(dir / "dup.csv", "path,label\na.pgm,blurry\na.pgm,sharp\n");
  EXPECT_THROW(read_labels_csv(dir / "dup.csv"), Error);
  test::write_bytes(dir / "hdr.csv", "file,class\na.pgm,blurry\n");
  EXPECT_THROW(read_labels_csv(dir / "hdr.csv"), Error);
  test::write_bytes(dir / "lbl.csv", "path,label\na.pgm,fuzzy\n");
  EXPECT_THROW(read_labels_csv(dir / "lbl.csv"), Error);
  test::write_bytes(dir / "crlf.csv", "path,label\r\nsub/a.pgm,blurry\r\n");
  const auto ds = read_labels_csv(dir / "crlf.csv");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].path, dir.path() / "sub/a.pgm");
  EXPECT_EQ(ds[0].label, Label::Blurry);
}
